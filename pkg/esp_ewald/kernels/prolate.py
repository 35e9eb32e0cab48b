"""Order-zero prolate spheroidal wave function: construction, evaluation, transform."""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import Legendre
from numpy.polynomial.legendre import leggauss
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from esp_ewald.config.settings import EPS_SOLVE_RANGE
from esp_ewald.errors import ParameterError, ProlateConvergenceError

logger = logging.getLogger(__name__)

# Trailing-coefficient threshold relative to the largest coefficient
TRAILING_TOL = 1e-15

# Largest number of even Legendre terms before giving up
MAX_TERMS = 2048

# Accepted range of the expansion tolerance
TOL_RANGE = (1e-16, 1e-6)

# Frequencies per quadrature block in prolate_hat
HAT_CHUNK = 4096


@dataclass(frozen=True, eq=False)
class ProlateExpansion:
    """Even Legendre expansion of psi_0^c, sup-normalized so that psi(0) = 1.

    coeffs[j] multiplies the standard Legendre polynomial P_{2j}.
    """

    c: float
    coeffs: np.ndarray
    eigenvalue: float
    eigenvalue_phase: float
    normalization: float

    @property
    def series(self) -> Legendre:
        """Full Legendre series (odd coefficients zero)."""
        full = np.zeros(2 * len(self.coeffs) - 1)
        full[::2] = self.coeffs
        return Legendre(full)

    @property
    def order(self) -> int:
        """Polynomial degree of the expansion."""
        return 2 * (len(self.coeffs) - 1)

    @property
    def integral(self) -> float:
        """Integral of psi over [0, 1]."""
        # Only P_0 has nonzero mean on [-1, 1]
        return float(self.coeffs[0])

    @property
    def l2_norm(self) -> float:
        """Square norm of psi on [-1, 1]."""
        degrees = 2 * np.arange(len(self.coeffs))
        return float(np.sqrt(np.sum(self.coeffs ** 2 * 2.0 / (2 * degrees + 1))))

    def __call__(self, x):
        return eval_prolate(self, x)[0]


def _operator_bands(c: float, n_terms: int) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal of the prolate differential operator.

    The operator -d/dx (1 - x^2) d/dx + c^2 x^2 is represented in the orthonormal
    even Legendre basis sqrt(k + 1/2) P_k, k = 0, 2, 4, ...
    """
    k = 2 * np.arange(n_terms, dtype=float)
    # Coupling of x between orthonormal degrees m-1 and m; zero for m = 0
    def a(m):
        m = np.asarray(m, dtype=float)
        return m / np.sqrt(np.maximum(4.0 * m * m - 1.0, 1.0))

    diag = k * (k + 1.0) + c * c * (a(k) ** 2 + a(k + 1.0) ** 2)
    off = c * c * a(k[:-1] + 1.0) * a(k[:-1] + 2.0)
    return diag, off


def _solve_coefficients(c: float, n_terms: int) -> np.ndarray:
    """Orthonormal-basis eigenvector of the smallest operator eigenvalue."""
    diag, off = _operator_bands(c, n_terms)
    _, vectors = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
    return vectors[:, 0]


@lru_cache(maxsize=256)
def build_prolate(c: float, tol: float = 1e-14) -> ProlateExpansion:
    """
    Build the Legendre expansion of psi_0^c.

    The expansion starts at 2*ceil(c) + 30 even terms and doubles until the
    trailing coefficient is negligible.

    Args:
        c: Bandwidth parameter (> 0)
        tol: Target precision of the expansion, in [1e-16, 1e-6]

    Returns:
        ProlateExpansion with psi(0) = 1

    Raises:
        ParameterError: c or tol out of range
        ProlateConvergenceError: expansion order cap exceeded
    """
    if not c > 0 or not math.isfinite(c):
        raise ParameterError(f"Prolate bandwidth c must be positive, got {c}")
    if not TOL_RANGE[0] <= tol <= TOL_RANGE[1]:
        raise ParameterError(f"Prolate tolerance must lie in {TOL_RANGE}, got {tol}")

    threshold = min(tol, TRAILING_TOL)
    n_terms = 2 * math.ceil(c) + 30
    while True:
        beta = _solve_coefficients(c, n_terms)
        if abs(beta[-1]) < threshold * np.max(np.abs(beta)):
            break
        logger.debug(f"Prolate c={c:.6g}: {n_terms} terms not converged, growing")
        n_terms *= 2
        if n_terms > MAX_TERMS:
            raise ProlateConvergenceError(
                f"Prolate expansion for c={c} did not converge within {MAX_TERMS} terms"
            )

    # Orthonormal -> standard Legendre basis
    degrees = 2 * np.arange(n_terms)
    coeffs = beta * np.sqrt(degrees + 0.5)

    value_at_zero = Legendre(_spread_even(coeffs))(0.0)
    coeffs = coeffs / value_at_zero

    # F_c[psi](0) / psi(0), evaluated by quadrature
    provisional = ProlateExpansion(c, coeffs, 0.0, 0.0, float(value_at_zero))
    eigenvalue = float(apply_fourier_operator(provisional, np.array([0.0]))[0])

    return ProlateExpansion(
        c=float(c),
        coeffs=coeffs,
        eigenvalue=abs(eigenvalue),
        eigenvalue_phase=0.0 if eigenvalue >= 0 else math.pi,
        normalization=float(value_at_zero),
    )


def _spread_even(coeffs: np.ndarray) -> np.ndarray:
    full = np.zeros(2 * len(coeffs) - 1)
    full[::2] = coeffs
    return full


def eval_prolate(exp: ProlateExpansion, x):
    """
    Evaluate psi and its derivative; both are zero outside [-1, 1].

    Args:
        exp: Prolate expansion
        x: Scalar or array of evaluation points

    Returns:
        Tuple of (value, derivative) with the shape of x
    """
    x = np.asarray(x, dtype=float)
    series = exp.series
    inside = np.abs(x) <= 1.0
    xc = np.where(inside, x, 0.0)
    value = np.where(inside, series(xc), 0.0)
    derivative = np.where(inside, series.deriv()(xc), 0.0)
    if value.ndim == 0:
        return float(value), float(derivative)
    return value, derivative


@lru_cache(maxsize=64)
def _gauss_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    return leggauss(n)


def _quadrature_size(exp: ProlateExpansion, max_freq: float) -> int:
    return 64 + exp.order // 2 + 2 * math.ceil(exp.c + max_freq)


def apply_fourier_operator(exp: ProlateExpansion, x) -> np.ndarray:
    """Apply F_c[psi](x) = int_{-1}^{1} psi(t) exp(i c x t) dt by Gauss-Legendre quadrature.

    The result is real because psi is even.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    nodes, weights = _gauss_nodes(_quadrature_size(exp, exp.c * float(np.max(np.abs(x)))))
    values = exp.series(nodes)
    return np.cos(exp.c * np.outer(x, nodes)) @ (weights * values)


def prolate_hat(exp: ProlateExpansion, xi):
    """
    Fourier transform of psi over its support.

    Args:
        exp: Prolate expansion
        xi: Scalar or array of frequencies

    Returns:
        int_{-1}^{1} psi(x) cos(xi x) dx with the shape of xi
    """
    xi = np.asarray(xi, dtype=float)
    flat = np.abs(xi.ravel())
    if flat.size == 0:
        return np.zeros_like(xi)
    nodes, weights = _gauss_nodes(_quadrature_size(exp, float(flat.max())))
    weighted = weights * exp.series(nodes)
    values = np.empty(flat.size)
    for start in range(0, flat.size, HAT_CHUNK):
        block = flat[start:start + HAT_CHUNK]
        values[start:start + HAT_CHUNK] = np.cos(np.outer(block, nodes)) @ weighted
    if xi.ndim == 0:
        return float(values[0])
    return values.reshape(xi.shape)


def prolate_edge_value(c: float) -> float:
    """psi_0^c(1) of the square-normalized function (unit L2 norm on [-1, 1])."""
    expansion = build_prolate(c)
    return float(np.sum(expansion.coeffs) / expansion.l2_norm)


@lru_cache(maxsize=64)
def solve_c(eps: float) -> float:
    """
    Find the bandwidth c with psi_0^c(1) = eps for the square-normalized psi.

    psi(1) decreases monotonically in c, so the root is bracketed by
    doubling and refined with Brent's method.

    Args:
        eps: Target edge value in [1e-8, 1e-2]

    Returns:
        Bandwidth parameter c

    Raises:
        ParameterError: eps outside the supported range
    """
    if not EPS_SOLVE_RANGE[0] <= eps <= EPS_SOLVE_RANGE[1]:
        raise ParameterError(f"Precision {eps} outside supported range {EPS_SOLVE_RANGE}")

    target = math.log(eps)

    def residual(c: float) -> float:
        return math.log(max(prolate_edge_value(c), 1e-300)) - target

    lower, upper = 1.0, 2.0
    while residual(upper) > 0:
        lower, upper = upper, 2.0 * upper

    c = brentq(residual, lower, upper, xtol=1e-12, rtol=1e-13)
    logger.debug(f"solve_c(eps={eps:g}) -> c={c:.6f}")
    return float(c)
