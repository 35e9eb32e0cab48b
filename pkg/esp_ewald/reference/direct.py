"""Mesh-free classical Ewald summation used as ground truth."""

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from esp_ewald.data.systems import ParticleSystem
from esp_ewald.errors import EwaldError, ParameterError

logger = logging.getLogger(__name__)

# Tightest tolerance trusted in double precision
MIN_TOL = 1e-12

# Largest system accepted by the O(N^2) oracle
MAX_PARTICLES = 10_000

# Splitting width ratio of the invariance recomputation
SPLIT_RATIO = 1.3

# Pair entries per real-space block
BLOCK_ENTRIES = 1 << 22

MAX_SHELLS = 200


@dataclass
class ReferenceResult:
    """Converged reference potentials, forces and energy."""

    potentials: np.ndarray
    forces: np.ndarray
    energy: float
    real_shells: int
    reciprocal_shells: int
    splitting: float
    residual: float
    timings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Convergence report."""
        return {
            "energy": self.energy,
            "n": int(self.potentials.shape[0]),
            "real_shells": self.real_shells,
            "reciprocal_shells": self.reciprocal_shells,
            "splitting": self.splitting,
            "residual": self.residual,
        }


def _shell_vectors(shell: int) -> np.ndarray:
    """Integer vectors with max |n_d| equal to shell."""
    if shell == 0:
        return np.zeros((1, 3), dtype=np.int64)
    span = range(-shell, shell + 1)
    vectors = [n for n in itertools.product(span, repeat=3) if max(abs(v) for v in n) == shell]
    return np.array(vectors, dtype=np.int64)


def _scale(values: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(values)))) if values.size else 1.0


def _real_shell_bound(system: ParticleSystem, kappa: float, shell: int) -> float:
    """Upper bound on any particle's potential or force change from one image shell."""
    r = (shell - 0.5) * float(np.min(system.box))
    count = (2 * shell + 1) ** 3 - (2 * shell - 1) ** 3
    screened = math.erfc(kappa * r) / (4.0 * math.pi * r)
    force = screened / r + kappa * math.exp(-(kappa * r) ** 2) / (2.0 * math.pi ** 1.5 * r)
    q = np.abs(system.charges)
    return count * float(np.sum(q)) * max(screened, float(np.max(q)) * force)


def _real_space(system: ParticleSystem, kappa: float, tol: float):
    """erfc-screened pair sum over image shells."""
    n, box, q = system.n, system.box, system.charges
    u = np.zeros(n)
    forces = np.zeros((n, 3))
    rows = max(1, BLOCK_ENTRIES // max(n, 1))
    shells = 0

    for shell in range(MAX_SHELLS):
        images = _shell_vectors(shell) * box
        du = np.zeros(n)
        df = np.zeros((n, 3))
        for start in range(0, n, rows):
            stop = min(start + rows, n)
            delta = system.positions[start:stop, None, :] - system.positions[None, :, :]
            delta -= box * np.round(delta / box)
            for image in images:
                d = delta + image
                r = np.sqrt(np.einsum("ijk,ijk->ij", d, d))
                if shell == 0:
                    r[np.arange(stop - start), np.arange(start, stop)] = np.inf
                screened = erfc(kappa * r) / (4.0 * math.pi * r)
                du[start:stop] += screened @ q
                radial = (screened / r + kappa * np.exp(-(kappa * r) ** 2) / (2.0 * math.pi ** 1.5 * r)) / r
                df[start:stop] += np.einsum("ij,ijk->ik", radial * q[None, :], d)
        u += du
        forces += q[:, None] * df
        shells = shell + 1
        change = max(float(np.max(np.abs(du))), float(np.max(np.abs(q[:, None] * df))))
        bound = _real_shell_bound(system, kappa, shell + 1)
        logger.debug(f"Real-space shell {shell}: max change {change:.3e}, next shell bound {bound:.3e}")
        if bound < 0.1 * tol * _scale(u):
            return u, forces, shells
    raise EwaldError(f"Real-space sum not converged after {MAX_SHELLS} shells")


def _reciprocal_space(system: ParticleSystem, kappa: float, tol: float):
    """Structure-factor sum over wavevector shells, k = 0 excluded."""
    n, box, q = system.n, system.box, system.charges
    volume = system.volume
    u = np.zeros(n)
    forces = np.zeros((n, 3))

    for shell in range(1, MAX_SHELLS):
        xi = 2.0 * math.pi * _shell_vectors(shell) / box
        xi2 = np.einsum("ij,ij->i", xi, xi)
        weight = np.exp(-xi2 / (4.0 * kappa * kappa)) / xi2 / volume
        phase = np.exp(1j * system.positions @ xi.T)
        structure = phase.T @ q
        # e^{-i xi r_i} S(xi)
        projected = np.conj(phase) * structure[None, :]
        du = np.real(projected) @ weight
        gradient = (np.imag(projected) * weight[None, :]) @ xi
        df = -q[:, None] * gradient
        u += du
        forces += df
        # |S| <= sum |q| bounds every mode of the shell
        bound = float(np.sum(weight)) * float(np.sum(np.abs(q))) * max(1.0, float(np.max(np.abs(q))) * math.sqrt(float(xi2.max())))
        logger.debug(f"Reciprocal shell {shell}: bound {bound:.3e}")
        if bound < 0.1 * tol * _scale(u):
            return u, forces, shell
    raise EwaldError(f"Reciprocal sum not converged after {MAX_SHELLS} shells")


def _ewald(system: ParticleSystem, kappa: float, tol: float):
    u_real, f_real, real_shells = _real_space(system, kappa, tol)
    u_recip, f_recip, recip_shells = _reciprocal_space(system, kappa, tol)
    self_term = system.charges * kappa / (2.0 * math.pi ** 1.5)
    potentials = u_real + u_recip - self_term
    forces = f_real + f_recip
    energy = 0.5 * float(np.dot(system.charges, potentials))
    return potentials, forces, energy, real_shells, recip_shells


def default_splitting(system: ParticleSystem, tol: float) -> float:
    """Screening parameter kappa for which the first image shell is negligible."""
    total = max(float(np.sum(np.abs(system.charges))), 1.0)
    exponent = math.log(1.0 / tol) + math.log(10.0 * 26.0 * total)
    return math.sqrt(exponent) / (0.5 * float(np.min(system.box)))


def direct_ewald(system: ParticleSystem, tol: float = 1e-9, verify: bool = True) -> ReferenceResult:
    """
    Classical Ewald sum without a mesh, converged shell by shell.

    Args:
        system: Neutral system with at most 10^4 particles
        tol: Relative convergence tolerance, >= 1e-12
        verify: Recompute with a 1.3 times wider splitting and compare

    Returns:
        ReferenceResult with a convergence report

    Raises:
        ParameterError: tol too small or system too large
        NeutralityError: non-neutral system
        EwaldError: the two splittings disagree by more than tol
    """
    if tol < MIN_TOL:
        raise ParameterError(f"Reference tolerance {tol} is below {MIN_TOL}")
    if system.n > MAX_PARTICLES:
        raise ParameterError(f"Reference oracle accepts at most {MAX_PARTICLES} particles, got {system.n}")
    system.check_neutral()

    kappa = default_splitting(system, tol)
    potentials, forces, energy, real_shells, recip_shells = _ewald(system, kappa, tol)

    residual = 0.0
    if verify:
        _, forces2, energy2, _, _ = _ewald(system, kappa / SPLIT_RATIO, tol)
        scale = max(1.0, abs(energy), _scale(forces))
        residual = max(abs(energy - energy2), float(np.max(np.abs(forces - forces2)))) / scale
        if residual > tol:
            raise EwaldError(f"Reference splittings disagree: residual {residual:.3e} > tol {tol:g}")

    logger.info(
        f"Reference Ewald: N={system.n}, kappa={kappa:.4f}, {real_shells} real / "
        f"{recip_shells} reciprocal shells, residual {residual:.2e}"
    )
    return ReferenceResult(potentials, forces, energy, real_shells, recip_shells, kappa, residual)


def surface_correction(system: ParticleSystem) -> float:
    """
    Dipole term |M|^2 / (6 V) separating spherical summation from the tinfoil sum.

    Adding it to the tinfoil energy gives the energy of a large sphere of
    replicas in vacuum.
    """
    dipole = system.dipole
    return float(np.dot(dipole, dipole)) / (6.0 * system.volume)
