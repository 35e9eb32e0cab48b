"""Shared fixtures."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add the repository root to the path
sys.path.insert(0, str(Path(__file__).parent.parent))

from esp_ewald.data.systems import GeneratorSpec, ParticleSystem, generate_system  # noqa: E402
from esp_ewald.ewald.plan import build_plan  # noqa: E402


@pytest.fixture
def random_system() -> ParticleSystem:
    """100 random +-1 charges in a cube of side 10."""
    return generate_system(GeneratorSpec("random", 100, box=10.0, seed=7))


@pytest.fixture
def small_system() -> ParticleSystem:
    """10 random +-1 charges in a cube of side 10."""
    return generate_system(GeneratorSpec("random", 10, box=10.0, seed=3))


@pytest.fixture
def rocksalt() -> ParticleSystem:
    """Eight-ion rock-salt cell at unit spacing."""
    return generate_system(GeneratorSpec("rocksalt", 8))


@pytest.fixture
def coarse_plan():
    """Cheap PSWF plan for a cube of side 10 at eps=1e-3."""
    return build_plan(10.0, "pswf", 1e-3, 2.0)


@pytest.fixture
def dipole() -> ParticleSystem:
    """A +-1 pair in a unit cube."""
    positions = np.array([[0.4, 0.45, 0.5], [0.6, 0.5, 0.55]])
    return ParticleSystem(positions, [1.0, -1.0], 1.0)
