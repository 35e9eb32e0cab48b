"""Spreading charges to the grid and interpolating grid values back to particles."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from esp_ewald.data.systems import ParticleSystem
from esp_ewald.errors import GridError
from esp_ewald.gridder.grid import FourierGrid, GridData, Space
from esp_ewald.kernels.window import WindowKernel

logger = logging.getLogger(__name__)

# Upper bound on footprint entries (particles x P^3) materialized per chunk
CHUNK_ENTRIES = 1 << 21


@dataclass
class Footprint:
    """Per-particle window weights over the P grid indices of each dimension."""

    # (m, 3, P) wrapped grid indices
    indices: np.ndarray
    # (m, 3, P) window values
    weights: np.ndarray
    # (m, 3, P) d(weight)/dx in inverse length, when requested
    gradients: Optional[np.ndarray] = None

    def flat_indices(self, shape) -> np.ndarray:
        """(m, P, P, P) row-major indices into the flattened grid."""
        ix, iy, iz = self.indices[:, 0], self.indices[:, 1], self.indices[:, 2]
        return (
            ix[:, :, None, None] * (shape[1] * shape[2])
            + iy[:, None, :, None] * shape[2]
            + iz[:, None, None, :]
        )

    def tensor(self) -> np.ndarray:
        """(m, P, P, P) products phi_x phi_y phi_z."""
        wx, wy, wz = self.weights[:, 0], self.weights[:, 1], self.weights[:, 2]
        return wx[:, :, None, None] * wy[:, None, :, None] * wz[:, None, None, :]


def footprint(positions: np.ndarray, window: WindowKernel, grid: FourierGrid, with_gradient: bool = False) -> Footprint:
    """
    Grid indices and window weights touched by each particle.

    The footprint starts at floor(s - P/2) + 1 with s = x / h, so the window
    argument s - l always lies in [-P/2, P/2] for both parities of P.
    """
    h = grid.h
    n = np.asarray(grid.n)
    s = np.asarray(positions, dtype=float) / h
    start = np.floor(s - 0.5 * window.P).astype(np.int64) + 1
    offsets = np.arange(window.P)
    raw = start[:, :, None] + offsets
    distance = s[:, :, None] - raw
    weights = np.asarray(window.phi_grid(distance))
    gradients = None
    if with_gradient:
        gradients = np.asarray(window.dphi_grid(distance)) / h[None, :, None]
    return Footprint(np.mod(raw, n[None, :, None]), weights, gradients)


def _chunks(count: int, P: int) -> list[slice]:
    size = max(1, CHUNK_ENTRIES // P ** 3)
    return [slice(start, min(start + size, count)) for start in range(0, count, size)]


def _check_window(window: WindowKernel, grid: FourierGrid) -> None:
    if window.P > min(grid.n):
        raise GridError(f"Window order P={window.P} exceeds grid size {grid.n}")


def spread(
    system: ParticleSystem,
    window: WindowKernel,
    grid: FourierGrid,
    threads: int = 1,
    deterministic: bool = True,
) -> GridData:
    """
    Spread charges onto the grid: b_l = sum_j q_j phi(r_j - h l).

    Args:
        system: Particles folded into the grid's box
        window: Window kernel
        grid: Target grid
        threads: Worker threads for the non-deterministic path
        deterministic: Accumulate in particle order with numpy.add.at

    Returns:
        Real-space GridData
    """
    _check_window(window, grid)
    shape = grid.shape
    flat_grid = np.zeros(grid.size)
    chunks = _chunks(system.n, window.P)

    def contribution(part: slice) -> tuple[np.ndarray, np.ndarray]:
        fp = footprint(system.positions[part], window, grid)
        values = system.charges[part][:, None, None, None] * fp.tensor()
        return fp.flat_indices(shape).ravel(), values.ravel()

    if deterministic or threads <= 1:
        for part in chunks:
            index, values = contribution(part)
            np.add.at(flat_grid, index, values)
    else:
        def private_grid(part: slice) -> np.ndarray:
            index, values = contribution(part)
            return np.bincount(index, weights=values, minlength=grid.size)

        with ThreadPoolExecutor(max_workers=threads) as pool:
            # Reduced in chunk order
            for partial in pool.map(private_grid, chunks):
                flat_grid += partial

    return GridData(flat_grid.reshape(shape), Space.REAL)


def interpolate(
    g: GridData,
    window: WindowKernel,
    grid: FourierGrid,
    points: np.ndarray,
    with_gradient: bool = False,
    threads: int = 1,
) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Interpolate grid values at points: u(r) = sum_l phi(r - h l) c_l.

    Args:
        g: Real-space grid values
        window: Window kernel
        grid: Grid the values live on
        points: (m, 3) positions inside the box
        with_gradient: Also return the gradient of the interpolant
        threads: Worker threads (chunks are independent)

    Returns:
        Tuple of (values of shape (m,), gradients of shape (m, 3) or None)
    """
    if g.space is not Space.REAL:
        raise GridError("Interpolation needs real-space grid values")
    if g.shape != grid.shape:
        raise GridError(f"Grid shape {g.shape} does not match {grid.shape}")
    _check_window(window, grid)

    points = np.asarray(points, dtype=float).reshape(-1, 3)
    flat_grid = np.real(g.values).ravel()
    chunks = _chunks(points.shape[0], window.P)

    def evaluate(part: slice) -> tuple[np.ndarray, Optional[np.ndarray]]:
        fp = footprint(points[part], window, grid, with_gradient)
        local = flat_grid[fp.flat_indices(grid.shape)]
        wx, wy, wz = fp.weights[:, 0], fp.weights[:, 1], fp.weights[:, 2]
        values = np.einsum("mijk,mi,mj,mk->m", local, wx, wy, wz, optimize=True)
        if not with_gradient:
            return values, None
        gx, gy, gz = fp.gradients[:, 0], fp.gradients[:, 1], fp.gradients[:, 2]
        gradient = np.stack([
            np.einsum("mijk,mi,mj,mk->m", local, gx, wy, wz, optimize=True),
            np.einsum("mijk,mi,mj,mk->m", local, wx, gy, wz, optimize=True),
            np.einsum("mijk,mi,mj,mk->m", local, wx, wy, gz, optimize=True),
        ], axis=1)
        return values, gradient

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(evaluate, chunks))
    else:
        results = [evaluate(part) for part in chunks]

    if not results:
        return np.zeros(0), (np.zeros((0, 3)) if with_gradient else None)
    values = np.concatenate([r[0] for r in results])
    gradient = np.concatenate([r[1] for r in results]) if with_gradient else None
    return values, gradient
