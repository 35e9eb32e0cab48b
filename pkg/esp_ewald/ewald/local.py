"""Short-range pair sum with cell lists under the minimum-image convention."""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from esp_ewald.data.systems import ParticleSystem
from esp_ewald.kernels.split import SplitKernel, local_kernel

logger = logging.getLogger(__name__)

# Candidate pairs materialized per work item
PAIR_BLOCK = 1 << 20

# Cells per dimension below which the stencil would revisit cells
MIN_CELLS = 3

# Half of the 27-cell stencil; the other half is covered by symmetry
HALF_STENCIL = [(0, 0, 0)] + [
    offset for offset in itertools.product((-1, 0, 1), repeat=3) if offset > (0, 0, 0)
]


@dataclass
class LocalResult:
    """Short-range potentials and forces."""

    potentials: np.ndarray
    forces: np.ndarray
    pair_count: int

    @property
    def neighbours(self) -> float:
        """Average number of neighbours within r_c."""
        n = self.potentials.shape[0]
        return 2.0 * self.pair_count / n if n else 0.0


def _minimum_image(delta: np.ndarray, box: np.ndarray) -> np.ndarray:
    return delta - box * np.round(delta / box)


def _accumulate(split: SplitKernel, system: ParticleSystem, i: np.ndarray, j: np.ndarray):
    """Potentials, forces and pair count from candidate pairs (i, j)."""
    n = system.n
    delta = _minimum_image(system.positions[i] - system.positions[j], system.box)
    r2 = np.einsum("ij,ij->i", delta, delta)
    keep = r2 < split.r_c ** 2
    i, j, delta, r = i[keep], j[keep], delta[keep], np.sqrt(r2[keep])

    potential, radial = local_kernel(split, r) if r.size else (np.zeros(0), np.zeros(0))
    q = system.charges
    u = np.bincount(i, weights=q[j] * potential, minlength=n)
    u += np.bincount(j, weights=q[i] * potential, minlength=n)

    # Force on i from j; j receives the opposite
    pair_force = (q[i] * q[j] * radial / r)[:, None] * delta
    forces = np.zeros((n, 3))
    for d in range(3):
        forces[:, d] = np.bincount(i, weights=pair_force[:, d], minlength=n)
        forces[:, d] -= np.bincount(j, weights=pair_force[:, d], minlength=n)
    return u, forces, int(r.size)


def _brute_force_pairs(n: int):
    """All pairs i < j, in row blocks."""
    rows = max(1, PAIR_BLOCK // max(n, 1))
    for start in range(0, n, rows):
        i = np.repeat(np.arange(start, min(start + rows, n)), n)
        j = np.tile(np.arange(n), min(start + rows, n) - start)
        mask = j > i
        yield i[mask], j[mask]


def _cell_pairs(system: ParticleSystem, cells: np.ndarray):
    """Candidate pairs from the half stencil, in blocks of cells."""
    cell3 = np.minimum((system.positions / system.box * cells).astype(np.int64), cells - 1)
    cell = np.ravel_multi_index(cell3.T, cells)
    total = int(np.prod(cells))

    order = np.argsort(cell, kind="stable")
    counts = np.bincount(cell, minlength=total)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    depth = int(counts.max())
    rank = np.arange(system.n) - starts[cell[order]]
    members = np.full((total, depth), -1, dtype=np.int64)
    members[cell[order], rank] = order

    grid_index = np.indices(cells).reshape(3, -1).T
    block = max(1, PAIR_BLOCK // max(depth * depth, 1))
    upper = np.triu(np.ones((depth, depth), dtype=bool), k=1)

    for offset in HALF_STENCIL:
        neighbour = np.ravel_multi_index(((grid_index + offset) % cells).T, cells)
        for start in range(0, total, block):
            stop = min(start + block, total)
            a = members[start:stop][:, :, None]
            b = members[neighbour[start:stop]][:, None, :]
            a, b = np.broadcast_arrays(a, b)
            valid = (a >= 0) & (b >= 0)
            if offset == (0, 0, 0):
                valid &= upper[None, :, :]
            yield a[valid], b[valid]


def pair_sum(split: SplitKernel, system: ParticleSystem, threads: int = 1) -> LocalResult:
    """
    Short-range potentials and forces over all pairs closer than r_c.

    Uses a 27-cell stencil with cell edge >= r_c; boxes with fewer than three
    cells per dimension fall back to the all-pairs minimum-image loop.
    """
    n = system.n
    cells = np.floor(system.box / split.r_c).astype(np.int64)
    if n < 2:
        return LocalResult(np.zeros(n), np.zeros((n, 3)), 0)
    if np.any(cells < MIN_CELLS):
        blocks = list(_brute_force_pairs(n))
    else:
        blocks = list(_cell_pairs(system, cells))

    def work(pairs):
        return _accumulate(split, system, *pairs)

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, blocks))
    else:
        results = [work(pairs) for pairs in blocks]

    u = np.zeros(n)
    forces = np.zeros((n, 3))
    pairs = 0
    for part_u, part_f, part_pairs in results:
        u += part_u
        forces += part_f
        pairs += part_pairs
    return LocalResult(u, forces, pairs)


def local_sum(plan, system: ParticleSystem, threads: int = 1) -> LocalResult:
    """Short-range part of a plan's splitting for a system."""
    result = pair_sum(plan.split, system, threads)
    logger.debug(f"Local sum: {result.pair_count} pairs, s={result.neighbours:.2f}")
    return result
