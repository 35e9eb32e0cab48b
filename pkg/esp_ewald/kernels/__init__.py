"""Kernel module."""
from .piecewise import PiecewiseChebyshev
from .prolate import ProlateExpansion, build_prolate, eval_prolate, prolate_hat, solve_c
from .split import SplitFamily, SplitKernel, bandlimit_frequency, build_split, local_kernel, spectral_hat
from .window import WindowFamily, WindowKernel, build_window
