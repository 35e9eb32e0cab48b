import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esp_ewald.data.systems import ParticleSystem
from esp_ewald.errors import GridError
from esp_ewald.gridder.grid import (
    FFTBackend,
    FourierGrid,
    GridData,
    Space,
    build_grid,
    check_grid_size,
    fft_forward,
    fft_inverse,
    influence_coefficients,
    squared_frequencies,
)
from esp_ewald.gridder.spreading import footprint, interpolate, spread
from esp_ewald.kernels.split import build_split
from esp_ewald.kernels.window import build_window

BOX = 10.0
N = (16, 16, 16)


def empty_grid(n=N, box=BOX) -> FourierGrid:
    return FourierGrid(tuple(n), (box, box, box), np.zeros(n))


def random_points(count: int, seed: int, box: float = BOX) -> np.ndarray:
    return np.random.default_rng(seed).uniform(0.0, box, size=(count, 3))


# ---------------------------------------------------------------------------
# FFT backend
# ---------------------------------------------------------------------------


def test_dft_round_trip():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((8, 12, 10))
    backend = FFTBackend(x.shape, workers=2)
    restored = backend.inverse(backend.forward(GridData(x)))
    np.testing.assert_allclose(restored.values / x.size, x, rtol=0, atol=1e-13 * np.max(np.abs(x)))


def test_forward_uses_positive_exponent():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((4, 4, 4))
    transformed = fft_forward(GridData(x)).values
    k = (1, 3, 2)
    l = np.indices(x.shape)
    phase = np.exp(2j * math.pi * sum(k[d] * l[d] for d in range(3)) / 4)
    assert transformed[k] == pytest.approx(np.sum(x * phase), abs=1e-12)


def test_inverse_uses_negative_exponent():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((4, 4, 4)) + 1j * rng.standard_normal((4, 4, 4))
    result = fft_inverse(GridData(x, Space.FOURIER)).values
    l = (2, 0, 1)
    k = np.indices(x.shape)
    phase = np.exp(-2j * math.pi * sum(l[d] * k[d] for d in range(3)) / 4)
    assert result[l] == pytest.approx(np.sum(x * phase), abs=1e-12)


def test_backend_rejects_wrong_shape_and_space():
    backend = FFTBackend((4, 4, 4))
    with pytest.raises(GridError):
        backend.forward(GridData(np.zeros((4, 4, 6))))
    with pytest.raises(GridError):
        backend.inverse(GridData(np.zeros((4, 4, 4)), Space.REAL))


@pytest.mark.parametrize("n", [(15, 16, 16), 1, (16, 0, 16)])
def test_grid_size_must_be_even(n):
    with pytest.raises(GridError):
        check_grid_size(n)


# ---------------------------------------------------------------------------
# Influence coefficients
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def gaussian_grid():
    split = build_split("gaussian", 1e-3, 1.0)
    window = build_window("bspline", 5, BOX / 16)
    return split, window, build_grid(split, window, N, BOX)


def test_zero_mode_is_dropped(gaussian_grid):
    _, _, grid = gaussian_grid
    assert grid.influence[0, 0, 0] == 0.0
    assert np.all(grid.influence >= 0.0)


def test_influence_is_even(gaussian_grid):
    _, _, grid = gaussian_grid
    p = grid.influence
    mirrored = np.roll(np.flip(p), 1, axis=(0, 1, 2))
    np.testing.assert_allclose(mirrored, p, rtol=1e-15)


def test_influence_matches_scalar_formula(gaussian_grid):
    split, _, grid = gaussian_grid
    xi = 2 * math.pi / BOX
    theta = xi * BOX / 16
    spectral = 2 * math.exp(-(split.r_c * xi) ** 2 / (4 * split.shape)) / (2 * xi * xi)
    phihat = (math.sin(theta / 2) / (theta / 2)) ** 5
    expected = spectral / (BOX ** 3 * phihat ** 2)
    assert grid.influence[1, 0, 0] == pytest.approx(expected, rel=1e-12)
    assert grid.influence[0, 0, 1] == pytest.approx(expected, rel=1e-12)


def test_orthorhombic_influence_uses_each_length():
    split = build_split("gaussian", 1e-3, 1.0)
    window = build_window("bspline", 5, 0.5)
    box = (8.0, 10.0, 12.0)
    p = influence_coefficients(split, window, (16, 20, 24), box)
    assert p.shape == (16, 20, 24)
    # k_x = 4 on L = 8 and k_y = 5 on L = 10 are the same physical frequency
    assert p[4, 0, 0] == pytest.approx(p[0, 5, 0], rel=1e-13)
    assert p[1, 0, 0] != pytest.approx(p[0, 1, 0])


def test_squared_frequencies_accept_cube_lengths():
    cube = squared_frequencies(8, 4.0)
    np.testing.assert_array_equal(cube, squared_frequencies((8, 8, 8), (4.0, 4.0, 4.0)))
    assert cube[1, 0, 0] == pytest.approx((2 * math.pi / 4.0) ** 2)


def test_window_underflow_is_reported():
    class VanishingWindow:
        P = 4

        @staticmethod
        def phihat_grid(theta):
            return np.where(np.asarray(theta) == 0.0, 1.0, 0.0)

    split = build_split("gaussian", 1e-3, 1.0)
    with pytest.raises(GridError):
        influence_coefficients(split, VanishingWindow(), (4, 4, 4), 4.0)


# ---------------------------------------------------------------------------
# Spreading and interpolation
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("family, P", [("pswf", 6), ("bspline", 5), ("bspline", 6)])
def test_footprint_arguments_stay_in_support(family, P):
    grid = empty_grid()
    window = build_window(family, P, BOX / 16, eps=1e-4)
    fp = footprint(random_points(50, P), window, grid)
    s = random_points(50, P) / grid.h
    assert fp.indices.shape == (50, 3, P)
    assert np.all((fp.indices >= 0) & (fp.indices < 16))
    start = np.floor(s - 0.5 * P).astype(int) + 1
    distance = s[:, :, None] - (start[:, :, None] + np.arange(P))
    assert np.all(np.abs(distance) <= 0.5 * P)


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 16), st.sampled_from(["pswf", "bspline"]))
def test_spread_interpolate_adjoint(seed, family):
    rng = np.random.default_rng(seed)
    grid = empty_grid()
    window = build_window(family, 6, BOX / 16, eps=1e-3)
    points = rng.uniform(0.0, BOX, size=(40, 3))
    charges = rng.standard_normal(40)
    values = rng.standard_normal(N)

    system = ParticleSystem(points, charges, BOX)
    spread_grid = spread(system, window, grid)
    interpolated, _ = interpolate(GridData(values), window, grid, system.positions)

    left = float(np.sum(spread_grid.values * values))
    right = float(np.dot(charges, interpolated))
    assert left == pytest.approx(right, rel=1e-12, abs=1e-12 * np.sum(np.abs(charges)))


def test_spread_of_unit_charge_sums_to_window_mass():
    grid = empty_grid()
    window = build_window("bspline", 5, BOX / 16)
    system = ParticleSystem([[3.3, 7.1, 0.2]], [1.0], BOX)
    assert np.sum(spread(system, window, grid).values) == pytest.approx(1.0, abs=1e-13)


@pytest.mark.parametrize("family, P", [("pswf", 6), ("bspline", 5)])
def test_spread_is_periodic_equivariant(random_system, family, P):
    grid = empty_grid()
    window = build_window(family, P, BOX / 16, eps=1e-4)
    base = spread(random_system, window, grid)
    for axis in range(3):
        shift = np.zeros(3)
        shift[axis] = grid.h[axis]
        moved = spread(random_system.translated(shift), window, grid)
        np.testing.assert_allclose(moved.values, np.roll(base.values, 1, axis=axis), atol=1e-12)


def test_threaded_spread_matches_deterministic(random_system):
    grid = empty_grid()
    window = build_window("pswf", 6, BOX / 16, eps=1e-4)
    ordered = spread(random_system, window, grid, deterministic=True)
    threaded = spread(random_system, window, grid, threads=4, deterministic=False)
    np.testing.assert_allclose(threaded.values, ordered.values, rtol=0, atol=1e-12)


def test_chunked_spread_matches_single_chunk(random_system, monkeypatch):
    grid = empty_grid()
    window = build_window("bspline", 5, BOX / 16)
    whole = spread(random_system, window, grid)
    monkeypatch.setattr("esp_ewald.gridder.spreading.CHUNK_ENTRIES", 7 * 125)
    chunked = spread(random_system, window, grid, threads=3, deterministic=False)
    np.testing.assert_allclose(chunked.values, whole.values, atol=1e-12)


def test_interpolated_gradient_matches_finite_difference():
    grid = empty_grid()
    window = build_window("bspline", 6, BOX / 16)
    rng = np.random.default_rng(9)
    values = GridData(rng.standard_normal(N))
    points = rng.uniform(1.0, 9.0, size=(20, 3))
    _, gradient = interpolate(values, window, grid, points, with_gradient=True)

    step = 1e-5 * BOX / 16
    numeric = np.empty_like(gradient)
    for d in range(3):
        shift = np.zeros(3)
        shift[d] = step
        plus, _ = interpolate(values, window, grid, points + shift)
        minus, _ = interpolate(values, window, grid, points - shift)
        numeric[:, d] = (plus - minus) / (2 * step)
    np.testing.assert_allclose(gradient, numeric, atol=1e-6 * np.max(np.abs(gradient)))


def test_interpolate_requires_real_space():
    grid = empty_grid()
    window = build_window("bspline", 5, BOX / 16)
    with pytest.raises(GridError):
        interpolate(GridData(np.zeros(N), Space.FOURIER), window, grid, np.zeros((1, 3)))
    with pytest.raises(GridError):
        interpolate(GridData(np.zeros((8, 8, 8))), window, grid, np.zeros((1, 3)))


def test_window_wider_than_grid_is_rejected():
    grid = empty_grid((4, 4, 4))
    window = build_window("bspline", 6, BOX / 4)
    system = ParticleSystem([[1.0, 1.0, 1.0]], [1.0], BOX)
    with pytest.raises(GridError):
        spread(system, window, grid)


def test_interpolate_empty_point_set():
    grid = empty_grid()
    window = build_window("bspline", 5, BOX / 16)
    values, gradient = interpolate(GridData(np.zeros(N)), window, grid, np.zeros((0, 3)), with_gradient=True)
    assert values.shape == (0,)
    assert gradient.shape == (0, 3)
