"""Periodic particle systems and reproducible system generators."""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.spatial.transform import Rotation

from esp_ewald.errors import NeutralityError, SystemFormatError

logger = logging.getLogger(__name__)

# Relative neutrality tolerance
NEUTRALITY_TOL = 1e-12

# Water-like motif: SPC/E partial charge and geometry
WATER_CHARGE = 0.4238
WATER_BOND_RATIO = 0.3226
WATER_ANGLE_DEG = 109.47


class SystemKind(Enum):
    """Generator kinds."""

    RANDOM = "random"
    ROCKSALT = "rocksalt"
    WATER = "water-like-lattice"

    @classmethod
    def _missing_(cls, value):
        if value == "water":
            return cls.WATER
        return None


@dataclass
class ParticleSystem:
    """Point charges in an orthorhombic periodic box."""

    positions: np.ndarray
    charges: np.ndarray
    box: np.ndarray

    def __post_init__(self):
        self.box = np.broadcast_to(np.asarray(self.box, dtype=float), (3,)).copy()
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        self.charges = np.asarray(self.charges, dtype=float).ravel()
        if self.positions.shape[0] != self.charges.shape[0]:
            raise SystemFormatError(
                f"{self.positions.shape[0]} positions but {self.charges.shape[0]} charges"
            )
        if np.any(self.box <= 0):
            raise SystemFormatError(f"Box lengths must be positive, got {self.box}")
        # Fold into [0, L)
        self.positions = np.mod(self.positions, self.box)
        self.positions[self.positions >= self.box] = 0.0

    @property
    def n(self) -> int:
        return self.charges.shape[0]

    @property
    def volume(self) -> float:
        return float(np.prod(self.box))

    @property
    def net_charge(self) -> float:
        return float(np.sum(self.charges))

    @property
    def dipole(self) -> np.ndarray:
        """Total dipole moment of the folded positions."""
        return self.charges @ self.positions

    def is_neutral(self, tol: float = NEUTRALITY_TOL) -> bool:
        scale = float(np.sum(np.abs(self.charges)))
        return abs(self.net_charge) <= tol * max(scale, 1.0)

    def check_neutral(self, tol: float = NEUTRALITY_TOL) -> None:
        """Raise NeutralityError unless sum(q) vanishes relative to sum(|q|)."""
        if not self.is_neutral(tol):
            raise NeutralityError(f"System carries net charge {self.net_charge:.3e}")

    def translated(self, shift) -> "ParticleSystem":
        return ParticleSystem(self.positions + np.asarray(shift, dtype=float), self.charges.copy(), self.box)

    def with_charges(self, charges) -> "ParticleSystem":
        return ParticleSystem(self.positions.copy(), charges, self.box)

    def to_dict(self) -> dict:
        """Summary for result files."""
        return {
            "n": self.n,
            "box": " ".join(f"{length:.17g}" for length in self.box),
            "net_charge": self.net_charge,
        }


@dataclass
class GeneratorSpec:
    """Reproducible recipe for a generated system."""

    kind: SystemKind
    n: int
    box: Optional[float] = None
    seed: int = 0
    spacing: float = 1.0

    def __post_init__(self):
        try:
            self.kind = SystemKind(self.kind)
        except ValueError as e:
            raise SystemFormatError(f"Unknown system kind {self.kind!r}") from e

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "n": self.n,
            "box": self.box,
            "seed": self.seed,
            "spacing": self.spacing,
        }


def _random_system(spec: GeneratorSpec) -> ParticleSystem:
    if spec.n < 2 or spec.n % 2:
        raise SystemFormatError(f"Random +-1 systems need an even N >= 2, got {spec.n}")
    box = spec.box if spec.box is not None else 10.0
    rng = np.random.default_rng(spec.seed)
    positions = rng.uniform(0.0, box, size=(spec.n, 3))
    charges = np.ones(spec.n)
    charges[spec.n // 2:] = -1.0
    charges = rng.permutation(charges)
    return ParticleSystem(positions, charges, box)


def _rocksalt_system(spec: GeneratorSpec) -> ParticleSystem:
    cells = round((spec.n / 8) ** (1.0 / 3.0))
    if cells < 1 or 8 * cells ** 3 != spec.n:
        raise SystemFormatError(f"Rock-salt systems need N = 8 m^3, got {spec.n}")
    side = 2 * cells
    spacing = spec.box / side if spec.box is not None else spec.spacing
    index = np.indices((side, side, side)).reshape(3, -1).T
    charges = np.where(index.sum(axis=1) % 2 == 0, 1.0, -1.0)
    return ParticleSystem(index * spacing, charges, side * spacing)


def _water_system(spec: GeneratorSpec) -> ParticleSystem:
    if spec.n < 3:
        raise SystemFormatError(f"Water-like systems need N >= 3, got {spec.n}")
    molecules = spec.n // 3
    if spec.n % 3:
        logger.warning(f"Water-like lattice holds whole molecules only: N={spec.n} gives {3 * molecules} sites")
    side = math.ceil(molecules ** (1.0 / 3.0) - 1e-9)
    spacing = spec.box / side if spec.box is not None else spec.spacing

    sites = np.indices((side, side, side)).reshape(3, -1).T[:molecules]
    oxygen = (sites + 0.5) * spacing

    half_angle = math.radians(WATER_ANGLE_DEG) / 2.0
    bond = WATER_BOND_RATIO * spacing
    arms = bond * np.array([
        [math.sin(half_angle), 0.0, math.cos(half_angle)],
        [-math.sin(half_angle), 0.0, math.cos(half_angle)],
    ])
    rotations = Rotation.random(molecules, spec.seed)
    hydrogen1 = oxygen + rotations.apply(arms[0])
    hydrogen2 = oxygen + rotations.apply(arms[1])

    positions = np.stack([oxygen, hydrogen1, hydrogen2], axis=1).reshape(-1, 3)
    charges = np.tile([-2.0 * WATER_CHARGE, WATER_CHARGE, WATER_CHARGE], molecules)
    return ParticleSystem(positions, charges, side * spacing)


def generate_system(spec: GeneratorSpec) -> ParticleSystem:
    """
    Generate a neutral periodic system.

    Args:
        spec: Generator recipe; identical specs give identical systems

    Returns:
        ParticleSystem folded into its box

    Raises:
        SystemFormatError: N incompatible with the requested kind
    """
    kind = spec.kind
    builders = {
        SystemKind.RANDOM: _random_system,
        SystemKind.ROCKSALT: _rocksalt_system,
        SystemKind.WATER: _water_system,
    }
    system = builders[kind](spec)
    logger.debug(f"Generated {kind.value} system: N={system.n}, box={system.box.tolist()}")
    return system
