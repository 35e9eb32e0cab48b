"""Ewald solver module."""
from .local import LocalResult, local_sum, pair_sum
from .parameters import (
    ParameterOverrides,
    SelectedParameters,
    estimate_aliasing,
    estimate_truncation,
    kernel_table,
    next_smooth_even,
    order_for_eps,
    select_parameters,
)
from .plan import EwaldPlan, ForceMethod, build_plan
from .solver import EnergyForces, evaluate, self_correction, spectral_sum
