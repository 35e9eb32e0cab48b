"""Data module."""
from .systems import GeneratorSpec, ParticleSystem, SystemKind, generate_system
