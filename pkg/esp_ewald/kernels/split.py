"""Radial splitting kernels: Gaussian (classical Ewald) and prolate (ESP)."""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.optimize import brentq
from scipy.special import erf

from esp_ewald.config.settings import EPS_SOLVE_RANGE
from esp_ewald.errors import ParameterError
from esp_ewald.kernels.piecewise import PiecewiseChebyshev
from esp_ewald.kernels.prolate import ProlateExpansion, build_prolate, prolate_hat, solve_c

logger = logging.getLogger(__name__)

# Subintervals of [0, 1] used to compile chi and Psi
SPLIT_PIECES = 8


class SplitFamily(Enum):
    """Splitting kernel families."""

    PSWF = "pswf"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True, eq=False)
class SplitKernel:
    """
    Splitting profile chi on [0, 1] with unit integral.

    The potential 1/(4 pi r) is split into Psi(r/r_c)/(4 pi r), which is smooth
    and handled on the grid, and the remainder, which vanishes beyond r_c.
    """

    family: SplitFamily
    eps: float
    shape: float
    r_c: float
    chi0: float
    chi_table: PiecewiseChebyshev
    psi_table: PiecewiseChebyshev
    prolate: Optional[ProlateExpansion] = None

    @property
    def normalization(self) -> float:
        """C0, the integral of the raw profile over [0, 1] (1 for Gaussian)."""
        return self.prolate.integral if self.prolate is not None else 1.0

    def chi(self, x):
        """Splitting profile chi(x), zero for |x| > 1."""
        x = np.abs(np.asarray(x, dtype=float))
        if self.family is SplitFamily.GAUSSIAN:
            value = 2.0 * math.sqrt(self.shape / math.pi) * np.exp(-self.shape * x * x)
            value = np.where(x <= 1.0, value, 0.0)
            return float(value) if value.ndim == 0 else value
        return self.chi_table(x)

    def Psi(self, y):
        """Antiderivative Psi(y) = int_0^y chi, clamped to Psi(1) beyond 1."""
        y = np.clip(np.asarray(y, dtype=float), 0.0, 1.0)
        if self.family is SplitFamily.GAUSSIAN:
            value = erf(math.sqrt(self.shape) * y)
            return float(value) if value.ndim == 0 else value
        return self.psi_table(y)

    def chihat(self, omega):
        """Transform of the even extension of chi over [-1, 1]."""
        omega = np.asarray(omega, dtype=float)
        if self.family is SplitFamily.GAUSSIAN:
            # Full-line transform; the tail beyond |x| = 1 is below eps
            value = 2.0 * np.exp(-omega * omega / (4.0 * self.shape))
            return float(value) if value.ndim == 0 else value
        value = np.asarray(prolate_hat(self.prolate, omega)) / self.normalization
        return float(value) if value.ndim == 0 else value

    def to_text(self) -> str:
        """Coefficient dump of the compiled Psi table."""
        header = (
            f"# split family={self.family.value} eps={self.eps:.6g} "
            f"shape={self.shape:.17g} r_c={self.r_c:.17g} chi0={self.chi0:.17g}\n"
        )
        return header + self.psi_table.to_text()


def _check_eps(eps: float) -> None:
    if not EPS_SOLVE_RANGE[0] <= eps <= EPS_SOLVE_RANGE[1]:
        raise ParameterError(f"Precision {eps} outside supported range {EPS_SOLVE_RANGE}")


def build_split(family, eps: float, r_c: float, shape: Optional[float] = None) -> SplitKernel:
    """
    Build a splitting kernel.

    Args:
        family: SplitFamily or its value ("pswf", "gaussian")
        eps: Target precision
        r_c: Cutoff radius
        shape: Override for alpha (Gaussian) or c (PSWF)

    Returns:
        SplitKernel with compiled chi and Psi tables
    """
    family = SplitFamily(family)
    _check_eps(eps)
    if not r_c > 0:
        raise ParameterError(f"Cutoff radius must be positive, got {r_c}")

    if family is SplitFamily.GAUSSIAN:
        alpha = shape if shape is not None else math.log(1.0 / eps)
        if not alpha > 0:
            raise ParameterError(f"Gaussian shape must be positive, got {alpha}")
        amplitude = 2.0 * math.sqrt(alpha / math.pi)
        chi_table = PiecewiseChebyshev.fit(
            lambda x: amplitude * np.exp(-alpha * x * x), 0.0, 1.0, SPLIT_PIECES
        )
        psi_table = PiecewiseChebyshev.fit(
            lambda y: erf(math.sqrt(alpha) * y), 0.0, 1.0, SPLIT_PIECES, fill=float(erf(math.sqrt(alpha)))
        )
        logger.debug(f"Gaussian split: alpha={alpha:.4f}, r_c={r_c}")
        return SplitKernel(family, eps, alpha, r_c, amplitude, chi_table, psi_table)

    c = shape if shape is not None else solve_c(eps)
    expansion = build_prolate(c)
    c0 = expansion.integral
    series = expansion.series
    antiderivative = series.integ(lbnd=0.0)

    chi_table = PiecewiseChebyshev.fit(lambda x: series(x) / c0, 0.0, 1.0, SPLIT_PIECES)
    psi_table = PiecewiseChebyshev.fit(
        lambda y: antiderivative(y) / c0, 0.0, 1.0, SPLIT_PIECES, fill=1.0
    )
    logger.debug(f"PSWF split: c={c:.6f}, C0={c0:.6g}, r_c={r_c}")
    return SplitKernel(family, eps, c, r_c, 1.0 / c0, chi_table, psi_table, expansion)


def local_kernel(split: SplitKernel, r):
    """
    Short-range kernel L(r) = (1 - Psi(r/r_c)) / (4 pi r) and its radial force.

    Args:
        split: Splitting kernel
        r: Scalar or array of positive distances

    Returns:
        Tuple of (potential, radial_force); both vanish for r >= r_c

    Raises:
        ParameterError: any r <= 0
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ParameterError("Local kernel is undefined at r <= 0")

    y = r / split.r_c
    inside = y < 1.0
    remainder = 1.0 - split.Psi(y)
    potential = np.where(inside, remainder / (4.0 * math.pi * r), 0.0)
    force = np.where(
        inside,
        remainder / (4.0 * math.pi * r * r) + split.chi(y) / (4.0 * math.pi * r * split.r_c),
        0.0,
    )
    if potential.ndim == 0:
        return float(potential), float(force)
    return potential, force


def spectral_hat(split: SplitKernel, xi):
    """
    3D transform of the smooth part, chi_hat(r_c xi) / (2 xi^2).

    The zero mode is defined as 0.
    """
    xi = np.asarray(xi, dtype=float)
    safe = np.where(xi > 0, xi, 1.0)
    value = np.where(xi > 0, np.asarray(split.chihat(split.r_c * safe)) / (2.0 * safe * safe), 0.0)
    return float(value) if value.ndim == 0 else value


def bandlimit_frequency(split: SplitKernel, level: Optional[float] = None, step: float = 0.25) -> float:
    """
    Smallest omega at which |chi_hat(omega)| / chi_hat(0) falls to level.

    Args:
        split: Splitting kernel
        level: Relative level (defaults to the kernel's eps)
        step: Scan step used to bracket the first crossing

    Returns:
        Dimensionless frequency omega
    """
    level = split.eps if level is None else level
    peak = split.chihat(0.0)

    def excess(omega: float) -> float:
        return abs(split.chihat(omega)) / peak - level

    lower, upper = 0.0, step
    while excess(upper) > 0:
        lower, upper = upper, upper + step
        if upper > 1e4:
            raise ParameterError(f"Kernel transform never falls to {level}")
    return float(brentq(excess, lower, upper, xtol=1e-10))
