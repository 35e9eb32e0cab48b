"""Parameter selection: grid size, window order, window bandwidth and error estimates."""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from esp_ewald.config.settings import (
    DEFAULT_GAUSSIAN_ORDER,
    EPS_TABLE_RANGE,
    OPTIMAL_PARAMETERS,
)
from esp_ewald.errors import ParameterError
from esp_ewald.gridder.grid import radial_table, squared_frequencies
from esp_ewald.kernels.prolate import build_prolate, prolate_hat, solve_c
from esp_ewald.kernels.split import SplitFamily, SplitKernel, build_split
from esp_ewald.kernels.window import WindowFamily, WindowKernel

logger = logging.getLogger(__name__)

# Aliasing is dominated by the six nearest reciprocal images
IMAGE_COUNT = 6

# Grid inflation stops beyond this multiple of the formula size
MAX_INFLATION = 8

# c1 search interval as multiples of the split bandwidth c, and coarse scan size
C1_BOUNDS = (1.0, 1.5)
C1_SCAN_POINTS = 11

# Samples per dimension of the truncation criterion interval [w, 2w]
TRUNCATION_SAMPLES = 64


class ForceMethod(Enum):
    """How spectral forces are obtained."""

    AD = "ad"
    IK = "ik"


@dataclass
class ParameterOverrides:
    """User overrides of automatically selected parameters."""

    n_f: Optional[tuple[int, int, int]] = None
    P: Optional[int] = None
    c1: Optional[float] = None
    shape: Optional[float] = None

    def __post_init__(self):
        if self.n_f is not None:
            self.n_f = tuple(int(v) for v in np.broadcast_to(np.asarray(self.n_f), (3,)))


@dataclass
class SelectedParameters:
    """Outcome of parameter selection."""

    family: SplitFamily
    eps: float
    r_c: float
    shape: float
    P: int
    n_f: tuple[int, int, int]
    raw_n_f: tuple[int, int, int]
    c1: Optional[float]
    aliasing: float
    truncation: float
    force_aliasing: float = 0.0
    force_method: ForceMethod = ForceMethod.AD
    inflation_steps: int = 0
    gated: bool = True
    notes: list[str] = field(default_factory=list)

    @property
    def total_modes(self) -> int:
        return int(np.prod(self.n_f))

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        return {
            "family": self.family.value,
            "eps": self.eps,
            "r_c": self.r_c,
            "shape": self.shape,
            "P": self.P,
            "n_f": " ".join(str(v) for v in self.n_f),
            "raw_n_f": " ".join(str(v) for v in self.raw_n_f),
            "N_f": self.total_modes,
            "c1": self.c1,
            "E_A": self.aliasing,
            "E_A_force": self.force_aliasing,
            "E_T": self.truncation,
            "inflation_steps": self.inflation_steps,
            "gated": self.gated,
        }


def is_smooth(n: int) -> bool:
    """True when n has no prime factor above 5."""
    for p in (2, 3, 5):
        while n % p == 0 and n > 1:
            n //= p
    return n == 1


def next_smooth_even(n: int) -> int:
    """Smallest even 5-smooth integer >= n."""
    m = max(2, int(n))
    m += m % 2
    while not is_smooth(m):
        m += 2
    return m


def order_for_eps(eps: float) -> int:
    """
    Window order P of the prolate method for a target precision.

    Interpolates the published table in log10(eps) and rounds up.

    Raises:
        ParameterError: eps outside the table range
    """
    if not EPS_TABLE_RANGE[0] * (1 - 1e-12) <= eps <= EPS_TABLE_RANGE[1] * (1 + 1e-12):
        raise ParameterError(
            f"No tabulated window order for eps={eps}; supported range is {EPS_TABLE_RANGE}, "
            f"pass P explicitly"
        )
    rows = sorted(OPTIMAL_PARAMETERS.items())
    logs = np.log10([eps_row for eps_row, _ in rows])
    orders = np.array([row[2] for _, row in rows], dtype=float)
    return int(math.ceil(float(np.interp(math.log10(eps), logs, orders)) - 1e-9))


def raw_grid_size(family, shape: float, box, r_c: float) -> tuple[int, int, int]:
    """
    Grid size per dimension from the truncation formulas.

    Gaussian: 2 * ceil(alpha L / (pi r_c)); prolate: ceil(c L / (pi r_c)).
    """
    family = SplitFamily(family)
    box = np.broadcast_to(np.asarray(box, dtype=float), (3,))
    if family is SplitFamily.GAUSSIAN:
        return tuple(int(2 * math.ceil(shape * L / (math.pi * r_c) - 1e-12)) for L in box)
    return tuple(int(math.ceil(shape * L / (math.pi * r_c) - 1e-12)) for L in box)


def kernel_table(eps_values) -> list[dict]:
    """Shape parameters and window orders per precision."""
    rows = []
    for eps in eps_values:
        try:
            P = order_for_eps(eps)
        except ParameterError:
            P = None
        rows.append({
            "eps": eps,
            "alpha_G": math.log(1.0 / eps),
            "c_pswf": solve_c(eps),
            "P_esp": P,
        })
    return rows


# ---------------------------------------------------------------------------
# Error estimates
# ---------------------------------------------------------------------------


def spectral_marginal(split: SplitKernel, n, box) -> np.ndarray:
    """
    |chi_hat(r_c |xi_k|)| / |xi_k|^2 summed over the y and z wavenumbers.

    Returns an array over k_x in FFT order with the zero mode excluded.
    """
    squared = squared_frequencies(n, box)
    safe = np.where(squared > 0, squared, 1.0)
    weight = np.abs(radial_table(lambda xi: split.chihat(split.r_c * xi), squared)) / safe
    weight[0, 0, 0] = 0.0
    return weight.sum(axis=(1, 2))


def _grid_angles(n_x: int) -> np.ndarray:
    return 2.0 * math.pi * np.fft.fftfreq(n_x, 1.0 / n_x) / n_x


def _image_ratio(phihat_grid, n_x: int) -> np.ndarray:
    theta = _grid_angles(n_x)
    base = np.asarray(phihat_grid(theta))
    image = np.asarray(phihat_grid(theta + 2.0 * math.pi))
    return np.abs(image / base)


def aliasing_from_marginal(marginal: np.ndarray, phihat_grid, force_method=None) -> float:
    """
    Six times the weighted mean of the first-image ratio over k_x.

    Potentials weight each k_x by the spectral marginal. Forces add the
    wavenumber |theta|, and window-differentiated forces carry the image
    wavenumber |theta + 2 pi| into the aliased term.
    """
    ratio = _image_ratio(phihat_grid, marginal.shape[0])
    if force_method is None:
        return float(IMAGE_COUNT * np.sum(marginal * ratio) / np.sum(marginal))

    theta = _grid_angles(marginal.shape[0])
    weight = marginal * np.abs(theta)
    if ForceMethod(force_method) is ForceMethod.AD:
        aliased = marginal * np.abs(theta + 2.0 * math.pi) * ratio
    else:
        aliased = weight * ratio
    return float(IMAGE_COUNT * np.sum(aliased) / np.sum(weight))


def gated_aliasing(marginal: np.ndarray, phihat_grid, force_method) -> tuple[float, float]:
    """Potential and force aliasing estimates on one grid."""
    return (
        aliasing_from_marginal(marginal, phihat_grid),
        aliasing_from_marginal(marginal, phihat_grid, force_method),
    )


def estimate_aliasing(split: SplitKernel, window: WindowKernel, n, box, force_method=None) -> float:
    """
    Relative aliasing estimate E_A of the spectral pipeline.

    Six times the kernel-weighted mean of |phi_hat(k + n e_x) / phi_hat(k)|
    over the nonzero modes. With a force method the estimate targets the
    relative force error of that method instead of the potential error.
    """
    return aliasing_from_marginal(spectral_marginal(split, n, box), window.phihat_grid, force_method)


def estimate_truncation(split: SplitKernel, n, box) -> float:
    """
    Per-mode truncation bound E_T.

    Largest |chi_hat(w)| / chi_hat(0) for w in [w_d, 2 w_d] with
    w_d = pi r_c n_d / L_d.
    """
    box = np.broadcast_to(np.asarray(box, dtype=float), (3,))
    peak = abs(split.chihat(0.0))
    bound = 0.0
    for size, length in zip(n, box):
        start = math.pi * split.r_c * size / length
        omega = np.linspace(start, 2.0 * start, TRUNCATION_SAMPLES)
        bound = max(bound, float(np.max(np.abs(split.chihat(omega)))) / peak)
    return bound


def _prolate_window_transform(c1: float, P: int):
    expansion = build_prolate(c1)

    def phihat_grid(theta):
        return 0.5 * P * np.asarray(prolate_hat(expansion, 0.5 * P * np.asarray(theta)))

    return phihat_grid


def _bspline_window_transform(P: int):
    def phihat_grid(theta):
        return np.sinc(np.asarray(theta) / (2.0 * math.pi)) ** P

    return phihat_grid


def optimize_c1(c: float, P: int, marginal: np.ndarray, force_method=None) -> tuple[float, float]:
    """
    Prolate window bandwidth minimizing the aliasing estimate on [c, 1.5 c].

    A coarse scan brackets the minimum, then a bounded scalar search refines it.
    With a force method the objective is the larger of the potential and
    force estimates.

    Returns:
        Tuple of (c1, E_A at c1)
    """
    lower, upper = C1_BOUNDS[0] * c, C1_BOUNDS[1] * c

    def objective(c1: float) -> float:
        transform = _prolate_window_transform(c1, P)
        if force_method is None:
            return aliasing_from_marginal(marginal, transform)
        return max(gated_aliasing(marginal, transform, force_method))

    scan = np.linspace(lower, upper, C1_SCAN_POINTS)
    values = np.array([objective(c1) for c1 in scan])
    best = int(np.argmin(values))
    logger.debug(f"c1 scan (P={P}): best {scan[best]:.4f} with E_A={values[best]:.3e}")

    left = scan[max(best - 1, 0)]
    right = scan[min(best + 1, len(scan) - 1)]
    result = minimize_scalar(objective, bounds=(left, right), method="bounded", options={"xatol": 1e-4 * c})
    if result.success and result.fun < values[best]:
        return float(result.x), float(result.fun)
    return float(scan[best]), float(values[best])


# ---------------------------------------------------------------------------
# Selection
# ---------------------------------------------------------------------------


def validate_geometry(box, r_c: float) -> np.ndarray:
    box = np.broadcast_to(np.asarray(box, dtype=float), (3,))
    if np.any(box <= 0):
        raise ParameterError(f"Box lengths must be positive, got {box.tolist()}")
    if not r_c > 0:
        raise ParameterError(f"Cutoff radius must be positive, got {r_c}")
    if r_c >= 0.5 * float(np.min(box)):
        raise ParameterError(f"Cutoff radius {r_c} must be below half the smallest box length {np.min(box)}")
    return box


def select_parameters(
    family,
    eps: float,
    box,
    r_c: float,
    overrides: Optional[ParameterOverrides] = None,
    gate: bool = True,
    gaussian_order: int = DEFAULT_GAUSSIAN_ORDER,
    split: Optional[SplitKernel] = None,
    force_method=ForceMethod.AD,
) -> SelectedParameters:
    """
    Choose shape, grid size, window order and window bandwidth.

    The grid starts at the truncation formula rounded up to an even 5-smooth
    size and is inflated until both the potential aliasing estimate and the
    force aliasing estimate of the chosen force method meet eps.

    Args:
        family: Splitting family
        eps: Target precision
        box: Box lengths (scalar for a cube)
        r_c: Cutoff radius
        overrides: Fixed n_f, P, c1 or shape
        gate: Enforce E_A <= eps and E_T <= eps (a warning otherwise)
        gaussian_order: Window order of the Gaussian baseline
        split: Prebuilt splitting kernel matching family, eps and r_c
        force_method: Spectral force method the force estimate targets

    Returns:
        SelectedParameters

    Raises:
        ParameterError: invalid input, or a gate failure with gate=True
    """
    family = SplitFamily(family)
    force_method = ForceMethod(force_method)
    overrides = overrides or ParameterOverrides()
    box = validate_geometry(box, r_c)
    split = split or build_split(family, eps, r_c, shape=overrides.shape)

    if overrides.P is not None:
        P = int(overrides.P)
    elif family is SplitFamily.PSWF:
        P = order_for_eps(eps)
    else:
        P = gaussian_order

    raw = raw_grid_size(family, split.shape, box, r_c)
    n = tuple(next_smooth_even(v) for v in raw)
    notes: list[str] = []

    if overrides.n_f is not None:
        if any(v % 2 or v < 2 for v in overrides.n_f):
            raise ParameterError(f"Grid size override must be even, got {overrides.n_f}")
        if any(o < r for o, r in zip(overrides.n_f, raw)):
            message = f"Grid size {overrides.n_f} is below the truncation minimum {raw}"
            if gate:
                raise ParameterError(message)
            notes.append(message)
        n = overrides.n_f

    if P > min(n):
        raise ParameterError(f"Window order P={P} exceeds grid size {n}")

    def aliasing_at(size) -> tuple[float, float, Optional[float]]:
        marginal = spectral_marginal(split, size, box)
        if family is SplitFamily.GAUSSIAN:
            c1, transform = None, _bspline_window_transform(P)
        else:
            c1 = overrides.c1
            if c1 is None:
                c1, _ = optimize_c1(split.shape, P, marginal, force_method)
            transform = _prolate_window_transform(c1, P)
        return (*gated_aliasing(marginal, transform, force_method), c1)

    aliasing, force_aliasing, c1 = aliasing_at(n)
    steps = 0
    limit = MAX_INFLATION * max(raw)
    while max(aliasing, force_aliasing) > eps and overrides.n_f is None:
        grown = tuple(next_smooth_even(v + 1) for v in n)
        if max(grown) > limit:
            raise ParameterError(
                f"Aliasing estimate {max(aliasing, force_aliasing):.3e} still above eps={eps} at grid {n}; "
                f"inflation cap {limit} reached"
            )
        n = grown
        steps += 1
        aliasing, force_aliasing, c1 = aliasing_at(n)
        logger.info(f"Grid inflated to {n} (E_A={aliasing:.3e}, force {force_aliasing:.3e}, eps={eps:g})")

    truncation = estimate_truncation(split, n, box)
    checks = (
        ("aliasing", aliasing),
        (f"{force_method.value} force aliasing", force_aliasing),
        ("truncation", truncation),
    )
    for name, value in checks:
        if value > eps:
            message = f"Estimated {name} error {value:.3e} exceeds eps={eps:g} at grid {n}"
            if gate:
                raise ParameterError(message)
            notes.append(message)
    for note in notes:
        logger.warning(f"Gate bypassed: {note}")

    selected = SelectedParameters(
        family=family,
        eps=eps,
        r_c=r_c,
        shape=split.shape,
        P=P,
        n_f=tuple(n),
        raw_n_f=raw,
        c1=c1,
        aliasing=aliasing,
        truncation=truncation,
        force_aliasing=force_aliasing,
        force_method=force_method,
        inflation_steps=steps,
        gated=gate and not notes,
    )
    logger.info(
        f"Selected {family.value}: shape={split.shape:.4f}, P={P}, n_f={n} (raw {raw}), "
        f"E_A={aliasing:.2e} ({force_method.value} force {force_aliasing:.2e}), E_T={truncation:.2e}"
    )
    return selected


def window_family_for(family) -> WindowFamily:
    """Window family paired with a splitting family."""
    return WindowFamily.PSWF if SplitFamily(family) is SplitFamily.PSWF else WindowFamily.BSPLINE
