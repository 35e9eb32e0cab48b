"""Configuration module."""
from .settings import OPTIMAL_PARAMETERS, Settings, settings
