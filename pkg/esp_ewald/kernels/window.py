"""Separable spreading/interpolation windows: cardinal B-splines and prolates."""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.interpolate import BSpline

from esp_ewald.config.settings import ORDER_RANGE
from esp_ewald.errors import ParameterError
from esp_ewald.kernels.piecewise import PiecewiseChebyshev
from esp_ewald.kernels.prolate import ProlateExpansion, build_prolate, prolate_hat, solve_c

logger = logging.getLogger(__name__)

# Default ratio c1 / c for prolate windows
DEFAULT_C1_RATIO = 1.2


class WindowFamily(Enum):
    """Window families."""

    PSWF = "pswf"
    BSPLINE = "bspline"


@dataclass(frozen=True, eq=False)
class WindowKernel:
    """
    One-dimensional window of P grid points, applied per dimension.

    The compiled tables live in grid units s = x / h on [-P/2, P/2], one
    polynomial per unit subinterval. Length-unit accessors take the axis
    whose spacing h[axis] converts x to s.
    """

    family: WindowFamily
    P: int
    h: tuple[float, float, float]
    table: PiecewiseChebyshev
    derivative_table: PiecewiseChebyshev
    c1: Optional[float] = None
    prolate: Optional[ProlateExpansion] = None

    def half_width(self, axis: int = 0) -> float:
        """Support half-width in length units along one axis."""
        return 0.5 * self.P * self.h[axis]

    def phi_grid(self, s):
        """Window value at distance s measured in grid spacings."""
        return self.table(s)

    def dphi_grid(self, s):
        """d phi / ds in grid units."""
        return self.derivative_table(s)

    def phi(self, x, axis: int = 0):
        return self.table(np.asarray(x, dtype=float) / self.h[axis])

    def dphi(self, x, axis: int = 0):
        """d phi / dx in length units."""
        h = self.h[axis]
        return np.asarray(self.derivative_table(np.asarray(x, dtype=float) / h)) / h

    def phihat(self, xi, axis: int = 0):
        """
        Dimensionless transform h^-1 int phi(x) exp(i xi x) dx.

        Args:
            xi: Scalar or array of angular frequencies (inverse length)
            axis: Dimension whose spacing applies

        Returns:
            Real transform values with the shape of xi
        """
        return self.phihat_grid(np.asarray(xi, dtype=float) * self.h[axis])

    def phihat_grid(self, theta):
        """Transform at theta = xi * h, independent of the spacing."""
        theta = np.asarray(theta, dtype=float)
        if self.family is WindowFamily.BSPLINE:
            # numpy sinc is sin(pi x)/(pi x)
            value = np.sinc(theta / (2.0 * np.pi)) ** self.P
        else:
            value = 0.5 * self.P * np.asarray(prolate_hat(self.prolate, 0.5 * self.P * theta))
        return float(value) if value.ndim == 0 else value

    def direct(self, x, axis: int = 0):
        """Window value from its defining function, bypassing the tables."""
        s = np.asarray(x, dtype=float) / self.h[axis]
        if self.family is WindowFamily.BSPLINE:
            return _bspline_values(self.P, s)
        return self.prolate(2.0 * s / self.P)

    def to_text(self) -> str:
        """Coefficient dump of the compiled window table."""
        c1 = f" c1={self.c1:.17g}" if self.c1 is not None else ""
        spacing = " ".join(f"{v:.17g}" for v in self.h)
        header = f"# window family={self.family.value} P={self.P} h={spacing}{c1}\n"
        return header + self.table.to_text()


def _bspline_values(P: int, s) -> np.ndarray:
    """Centered cardinal B-spline of order P (degree P - 1) via de Boor recursion."""
    knots = np.arange(P + 1, dtype=float) - 0.5 * P
    basis = BSpline.basis_element(knots, extrapolate=False)
    return np.nan_to_num(basis(np.asarray(s, dtype=float)), nan=0.0)


def build_window(
    family,
    P: int,
    h,
    eps: Optional[float] = None,
    c1: Optional[float] = None,
) -> WindowKernel:
    """
    Build a compiled window kernel.

    Args:
        family: WindowFamily or its value ("pswf", "bspline")
        P: Support width in grid points, in [3, 16]
        h: Grid spacing, scalar or one per dimension
        eps: Target precision (sets the default c1 of prolate windows)
        c1: Prolate window bandwidth

    Returns:
        WindowKernel

    Raises:
        ParameterError: P or h out of range, or a prolate window with neither eps nor c1
    """
    family = WindowFamily(family)
    if not ORDER_RANGE[0] <= P <= ORDER_RANGE[1]:
        raise ParameterError(f"Window order P must lie in {ORDER_RANGE}, got {P}")
    h = tuple(float(v) for v in np.broadcast_to(np.asarray(h, dtype=float), (3,)))
    if not all(v > 0 for v in h):
        raise ParameterError(f"Grid spacing must be positive, got {list(h)}")

    half = 0.5 * P
    if family is WindowFamily.BSPLINE:
        table = PiecewiseChebyshev.fit(lambda s: _bspline_values(P, s), -half, half, P)
        return WindowKernel(family, P, h, table, table.derivative())

    if c1 is None:
        if eps is None:
            raise ParameterError("A prolate window needs eps or an explicit c1")
        c1 = DEFAULT_C1_RATIO * solve_c(eps)
    expansion = build_prolate(c1)
    series = expansion.series
    table = PiecewiseChebyshev.fit(lambda s: series(s / half), -half, half, P)
    logger.debug(f"PSWF window: P={P}, h={h}, c1={c1:.6f}")
    return WindowKernel(family, P, h, table, table.derivative(), float(c1), expansion)
