"""Energies and forces: local sum, five-stage spectral pipeline and self correction."""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from esp_ewald.data.systems import ParticleSystem
from esp_ewald.errors import GridError
from esp_ewald.ewald.local import local_sum
from esp_ewald.ewald.plan import EwaldPlan, ForceMethod
from esp_ewald.gridder.grid import FFTBackend, GridData, Space
from esp_ewald.gridder.spreading import interpolate, spread

logger = logging.getLogger(__name__)

STAGES = ("local", "spread", "fft", "scale", "ifft", "interpolate")


@dataclass
class EnergyForces:
    """Potentials, forces and total energy of a system."""

    potentials: np.ndarray
    forces: np.ndarray
    energy: float
    timings: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)

    @property
    def net_force(self) -> np.ndarray:
        return self.forces.sum(axis=0)

    def to_dict(self) -> dict:
        """Summary without per-particle arrays."""
        summary = {"energy": self.energy, "n": int(self.potentials.shape[0])}
        summary.update(self.stats)
        return summary


class _StageClock:
    """Accumulates wall time per pipeline stage."""

    def __init__(self):
        self.timings = {stage: 0.0 for stage in STAGES}
        self._start = time.perf_counter()

    def lap(self, stage: str) -> None:
        now = time.perf_counter()
        self.timings[stage] += now - self._start
        self._start = now


def _check_box(plan: EwaldPlan, system: ParticleSystem) -> None:
    if not np.allclose(system.box, plan.box, rtol=1e-12, atol=0.0):
        raise GridError(f"System box {system.box.tolist()} does not match plan box {plan.box.tolist()}")


def gradient_multipliers(plan: EwaldPlan) -> list[np.ndarray]:
    """
    Per-dimension factors -2 pi i k_d / L_d broadcast over the grid.

    The unpaired Nyquist index -n_d/2 gets 0 so real data stays real.
    """
    multipliers = []
    for d, (size, length) in enumerate(zip(plan.grid.n, plan.grid.box)):
        k = np.fft.fftfreq(size, 1.0 / size)
        k[size // 2] = 0.0
        shape = [1, 1, 1]
        shape[d] = size
        multipliers.append((-2j * math.pi * k / length).reshape(shape))
    return multipliers


def spectral_sum(
    plan: EwaldPlan,
    system: ParticleSystem,
    threads: int = 1,
    deterministic: bool = True,
    clock: Optional[_StageClock] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Smooth-part potentials and forces via spread, FFT, scale, IFFT and interpolate.

    Args:
        plan: Evaluation plan
        system: Particle system in the plan's box
        threads: Worker threads for spreading, FFTs and interpolation
        deterministic: Fixed accumulation order in spreading
        clock: Stage timer to accumulate into

    Returns:
        Tuple of (potentials (N,), forces (N, 3))
    """
    _check_box(plan, system)
    clock = clock or _StageClock()
    grid, window = plan.grid, plan.window
    backend = FFTBackend(grid.shape, workers=threads)

    charge_grid = spread(system, window, grid, threads=threads, deterministic=deterministic)
    clock.lap("spread")
    transformed = backend.forward(charge_grid)
    clock.lap("fft")
    scaled = transformed.values * grid.influence
    clock.lap("scale")

    if plan.force_method is ForceMethod.AD:
        potential_grid = backend.inverse(GridData(scaled, Space.FOURIER))
        clock.lap("ifft")
        potentials, gradient = interpolate(
            potential_grid, window, grid, system.positions, with_gradient=True, threads=threads
        )
        clock.lap("interpolate")
    else:
        derivative_data = [scaled * factor for factor in gradient_multipliers(plan)]
        clock.lap("scale")
        potential_grid = backend.inverse(GridData(scaled, Space.FOURIER))
        field_grids = [backend.inverse(GridData(data, Space.FOURIER)) for data in derivative_data]
        clock.lap("ifft")
        potentials, _ = interpolate(potential_grid, window, grid, system.positions, threads=threads)
        gradient = np.stack(
            [interpolate(g, window, grid, system.positions, threads=threads)[0] for g in field_grids],
            axis=1,
        )
        clock.lap("interpolate")

    forces = -system.charges[:, None] * gradient
    if plan.force_method is ForceMethod.AD and system.n:
        # Window differentiation breaks momentum conservation; spread the residual evenly
        net = forces.sum(axis=0)
        forces -= net / system.n
        logger.debug(f"Removed net spectral force {np.linalg.norm(net):.3e}")
    return potentials, forces


def self_correction(plan: EwaldPlan, charges) -> np.ndarray:
    """Self term q_i chi(0) / (4 pi r_c) included by the spectral sum."""
    return np.asarray(charges, dtype=float) * plan.split.chi0 / (4.0 * math.pi * plan.r_c)


def evaluate(
    plan: EwaldPlan,
    system: ParticleSystem,
    threads: int = 1,
    deterministic: bool = True,
) -> EnergyForces:
    """
    Periodic Coulomb potentials, forces and energy, excluding self interaction.

    Args:
        plan: Evaluation plan for the system's box
        system: Neutral particle system
        threads: Worker threads
        deterministic: Reproducible accumulation order

    Returns:
        EnergyForces with per-stage timings

    Raises:
        NeutralityError: the system carries net charge
        GridError: box mismatch
    """
    _check_box(plan, system)
    system.check_neutral()

    start = time.perf_counter()
    clock = _StageClock()
    local = local_sum(plan, system, threads=threads)
    clock.lap("local")
    u_spectral, f_spectral = spectral_sum(plan, system, threads, deterministic, clock)

    potentials = local.potentials + u_spectral - self_correction(plan, system.charges)
    forces = local.forces + f_spectral
    energy = 0.5 * float(np.dot(system.charges, potentials))

    timings = dict(clock.timings)
    timings["total"] = time.perf_counter() - start
    stats = dict(plan.stats)
    stats["s"] = local.neighbours
    logger.debug(f"Evaluated N={system.n}: E={energy:.10g}, total {timings['total']:.3f}s")
    return EnergyForces(potentials, forces, energy, timings, stats)
