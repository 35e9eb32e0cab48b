"""Fourier grid, grid data containers, FFT backend and influence coefficients."""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.fft

from esp_ewald.errors import GridError
from esp_ewald.kernels.split import SplitKernel, spectral_hat
from esp_ewald.kernels.window import WindowKernel

logger = logging.getLogger(__name__)

# Smallest window transform magnitude accepted inside the band
PHIHAT_FLOOR = 1e-30


class Space(Enum):
    """Representation of grid values."""

    REAL = "real"
    FOURIER = "fourier"


@dataclass(frozen=True, eq=False)
class FourierGrid:
    """
    Uniform periodic grid of n[0] x n[1] x n[2] points over the box.

    Mode arrays use FFT ordering: index j holds wavenumber j for j < n/2 and
    j - n otherwise, which covers {-n/2, ..., n/2 - 1} per dimension.
    """

    n: tuple[int, int, int]
    box: tuple[float, float, float]
    influence: np.ndarray

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(self.n)

    @property
    def h(self) -> np.ndarray:
        return np.asarray(self.box, dtype=float) / np.asarray(self.n)

    @property
    def size(self) -> int:
        """Total number of Fourier modes N_f."""
        return int(np.prod(self.n))

    @property
    def volume(self) -> float:
        return float(np.prod(self.box))

    def wavenumbers(self) -> list[np.ndarray]:
        """Integer wavenumbers per dimension in FFT order."""
        return [np.fft.fftfreq(n, 1.0 / n).astype(np.int64) for n in self.n]


@dataclass
class GridData:
    """Grid values with their representation tag."""

    values: np.ndarray
    space: Space = Space.REAL

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def real(self) -> np.ndarray:
        return np.real(self.values)


def check_grid_size(n) -> tuple[int, int, int]:
    n = tuple(int(v) for v in np.broadcast_to(np.asarray(n), (3,)))
    for value in n:
        if value < 2 or value % 2:
            raise GridError(f"Grid size must be even and >= 2 per dimension, got {n}")
    return n


class FFTBackend:
    """
    Unnormalized DFT pair on a fixed grid shape.

    forward: b_hat[k] = sum_l b[l] exp(+2 pi i k.l / n)
    inverse: c[l] = sum_k c_hat[k] exp(-2 pi i k.l / n)
    so inverse(forward(x)) = N_f * x.
    """

    def __init__(self, shape, workers: int = 1):
        self.shape = tuple(shape)
        self.workers = max(1, int(workers))

    def _check(self, g: GridData, space: Space) -> None:
        if g.shape != self.shape:
            raise GridError(f"Grid shape {g.shape} does not match backend shape {self.shape}")
        if g.space is not space:
            raise GridError(f"Expected {space.value}-space data, got {g.space.value}")

    def forward(self, g: GridData) -> GridData:
        self._check(g, Space.REAL)
        # norm="forward" leaves the backward (e^+) transform unscaled
        values = scipy.fft.ifftn(g.values, norm="forward", workers=self.workers)
        return GridData(values, Space.FOURIER)

    def inverse(self, g: GridData) -> GridData:
        self._check(g, Space.FOURIER)
        values = scipy.fft.fftn(g.values, workers=self.workers)
        return GridData(values, Space.REAL)


def fft_forward(g: GridData, workers: int = 1) -> GridData:
    return FFTBackend(g.shape, workers).forward(g)


def fft_inverse(g: GridData, workers: int = 1) -> GridData:
    return FFTBackend(g.shape, workers).inverse(g)


def window_transforms(window: WindowKernel, n) -> list[np.ndarray]:
    """
    1D window transforms at theta = 2 pi k / n for each dimension.

    Raises:
        GridError: the transform underflows at an in-band mode
    """
    transforms = []
    for size in n:
        k = np.fft.fftfreq(size, 1.0 / size)
        values = np.asarray(window.phihat_grid(2.0 * math.pi * k / size))
        if np.any(np.abs(values) < PHIHAT_FLOOR):
            raise GridError(f"Window (P={window.P}) too narrow for grid of {size} points")
        transforms.append(values)
    return transforms


def radial_table(func, squared: np.ndarray) -> np.ndarray:
    """Evaluate a radial function once per distinct squared frequency."""
    unique, inverse = np.unique(squared, return_inverse=True)
    return np.asarray(func(np.sqrt(unique)))[inverse].reshape(squared.shape)


def squared_frequencies(n, box) -> np.ndarray:
    """|xi_k|^2 with xi_k = 2 pi k / L over the FFT-ordered mode set."""
    n = np.broadcast_to(np.asarray(n, dtype=int), (3,))
    box = np.broadcast_to(np.asarray(box, dtype=float), (3,))
    axes = [
        (2.0 * math.pi * np.fft.fftfreq(size, 1.0 / size) / length) ** 2
        for size, length in zip(n, box)
    ]
    return axes[0][:, None, None] + axes[1][None, :, None] + axes[2][None, None, :]


def influence_coefficients(split: SplitKernel, window: WindowKernel, n, box) -> np.ndarray:
    """
    Diagonal scaling applied between the forward and inverse FFT.

    p_k = S_hat(xi_k) / (V * prod_d |phi_hat_d(xi_k,d)|^2), with p_0 = 0.

    Args:
        split: Splitting kernel
        window: Window kernel (tables in grid units)
        n: Grid points per dimension
        box: Box lengths

    Returns:
        Real array of shape n in FFT order

    Raises:
        GridError: window transform underflow
    """
    n = check_grid_size(n)
    box = np.broadcast_to(np.asarray(box, dtype=float), (3,))
    phx, phy, phz = window_transforms(window, n)

    spectral = radial_table(lambda xi: spectral_hat(split, xi), squared_frequencies(n, box))
    deconvolution = (phx ** 2)[:, None, None] * (phy ** 2)[None, :, None] * (phz ** 2)[None, None, :]
    influence = spectral / (float(np.prod(box)) * deconvolution)
    influence[0, 0, 0] = 0.0
    return influence


def build_grid(split: SplitKernel, window: WindowKernel, n, box) -> FourierGrid:
    n = check_grid_size(n)
    box = tuple(float(v) for v in np.broadcast_to(np.asarray(box, dtype=float), (3,)))
    influence = influence_coefficients(split, window, n, box)
    logger.debug(f"Fourier grid {n} over box {box}: N_f={int(np.prod(n))}")
    return FourierGrid(n, box, influence)
