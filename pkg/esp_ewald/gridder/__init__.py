"""Gridder module."""
from .grid import FFTBackend, FourierGrid, GridData, Space, build_grid, fft_forward, fft_inverse, influence_coefficients
from .spreading import footprint, interpolate, spread
