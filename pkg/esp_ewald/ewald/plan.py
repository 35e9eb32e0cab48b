"""Immutable evaluation plans: kernels, grid and selected parameters."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from esp_ewald.config.settings import DEFAULT_GAUSSIAN_ORDER
from esp_ewald.errors import ParameterError
from esp_ewald.ewald import parameters as selection
from esp_ewald.ewald.parameters import (
    ForceMethod,
    ParameterOverrides,
    SelectedParameters,
    select_parameters,
    window_family_for,
)
from esp_ewald.gridder.grid import FourierGrid, build_grid
from esp_ewald.kernels.split import SplitFamily, SplitKernel, build_split
from esp_ewald.kernels.window import WindowKernel, build_window

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EwaldPlan:
    """Everything needed to evaluate a system in a given box; shareable across threads."""

    split: SplitKernel
    window: WindowKernel
    grid: FourierGrid
    parameters: SelectedParameters
    force_method: ForceMethod = ForceMethod.AD

    @property
    def family(self) -> SplitFamily:
        return self.split.family

    @property
    def eps(self) -> float:
        return self.parameters.eps

    @property
    def r_c(self) -> float:
        return self.split.r_c

    @property
    def P(self) -> int:
        return self.window.P

    @property
    def box(self) -> np.ndarray:
        return np.asarray(self.grid.box, dtype=float)

    @property
    def stats(self) -> dict:
        """Predicted error levels."""
        return {
            "E_T": self.parameters.truncation,
            "E_A": self.parameters.aliasing,
            "E_A_force": self.parameters.force_aliasing,
        }

    def to_dict(self) -> dict:
        """Plan echo for result files."""
        echo = self.parameters.to_dict()
        echo["force_method"] = self.force_method.value
        echo["box"] = " ".join(f"{v:.17g}" for v in self.grid.box)
        echo["h"] = " ".join(f"{v:.17g}" for v in self.grid.h)
        return echo


def build_plan(
    box,
    family,
    eps: float,
    r_c: float,
    overrides: Optional[ParameterOverrides] = None,
    force_method=ForceMethod.AD,
    gate: bool = True,
    gaussian_order: int = DEFAULT_GAUSSIAN_ORDER,
) -> EwaldPlan:
    """
    Select parameters and compile all kernels for a box.

    Args:
        box: Box lengths (scalar for a cube)
        family: Splitting family ("pswf" or "gaussian")
        eps: Target precision
        r_c: Cutoff radius, below half the smallest box length
        overrides: Fixed n_f, P, c1 or shape
        force_method: "ad" or "ik"
        gate: Enforce the error-estimate gates
        gaussian_order: Window order of the Gaussian baseline

    Returns:
        EwaldPlan

    Raises:
        ParameterError: invalid parameters or failed gates
        GridError: window and grid incompatible
    """
    family = SplitFamily(family)
    force_method = ForceMethod(force_method)
    overrides = overrides or ParameterOverrides()

    split = build_split(family, eps, r_c, shape=overrides.shape)
    params = select_parameters(
        family, eps, box, r_c, overrides, gate=gate, gaussian_order=gaussian_order, split=split,
        force_method=force_method,
    )
    box = np.broadcast_to(np.asarray(box, dtype=float), (3,))
    h = box / np.asarray(params.n_f)

    window = build_window(window_family_for(family), params.P, h, eps=eps, c1=params.c1)
    if np.any(0.5 * params.P * h > r_c + h):
        message = f"Window half-width {0.5 * params.P * h.max():.4g} exceeds r_c + h"
        if gate:
            raise ParameterError(message)
        logger.warning(f"Gate bypassed: {message}")

    grid = build_grid(split, window, params.n_f, box)
    logger.info(
        f"Plan ready: {family.value}, eps={eps:g}, r_c={r_c}, n_f={params.n_f}, P={params.P}, "
        f"force={force_method.value}"
    )
    return EwaldPlan(split, window, grid, params, force_method)


def estimate_aliasing(plan: EwaldPlan, force_method=None) -> float:
    """E_A of a compiled plan on its own grid and window."""
    return selection.estimate_aliasing(plan.split, plan.window, plan.grid.n, plan.box, force_method)


def estimate_truncation(plan: EwaldPlan) -> float:
    """E_T of a compiled plan on its own grid."""
    return selection.estimate_truncation(plan.split, plan.grid.n, plan.box)
