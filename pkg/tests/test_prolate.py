import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from esp_ewald.config.settings import OPTIMAL_PARAMETERS
from esp_ewald.errors import ParameterError
from esp_ewald.kernels.prolate import (
    apply_fourier_operator,
    build_prolate,
    eval_prolate,
    prolate_edge_value,
    prolate_hat,
    solve_c,
)


@pytest.mark.parametrize("eps", sorted(OPTIMAL_PARAMETERS))
def test_solve_c_reproduces_published_bandwidths(eps):
    published = OPTIMAL_PARAMETERS[eps][1]
    assert solve_c(eps) == pytest.approx(published, rel=3e-3)


@pytest.mark.parametrize("c, edge", [(12.024, 1e-4), (9.5392, 1e-3)])
def test_edge_value_at_published_bandwidth(c, edge):
    assert prolate_edge_value(c) == pytest.approx(edge, rel=5e-2)


def test_solve_c_hits_target_edge_value():
    c = solve_c(3e-6)
    assert prolate_edge_value(c) == pytest.approx(3e-6, rel=1e-6)


def test_edge_value_uses_square_norm():
    exp = build_prolate(9.5392)
    norm, _ = quad(lambda x: exp(x) ** 2, -1.0, 1.0, limit=200)
    assert exp.l2_norm == pytest.approx(np.sqrt(norm), rel=1e-10)
    assert prolate_edge_value(9.5392) == pytest.approx(float(exp(1.0)) / np.sqrt(norm), rel=1e-8)


def test_unit_value_at_origin():
    exp = build_prolate(12.024)
    assert exp(0.0) == pytest.approx(1.0, abs=1e-14)


def test_eigen_relation():
    exp = build_prolate(12.024)
    x = np.linspace(-1.0, 1.0, 21)
    values, _ = eval_prolate(exp, x)
    transformed = apply_fourier_operator(exp, x)
    np.testing.assert_allclose(transformed, exp.eigenvalue * values, atol=1e-10 * exp.eigenvalue)


def test_derivative_matches_finite_difference():
    exp = build_prolate(12.024)
    _, derivative = eval_prolate(exp, 0.5)
    step = 1e-6
    numeric = (exp(0.5 + step) - exp(0.5 - step)) / (2 * step)
    assert derivative == pytest.approx(numeric, rel=1e-8)


def test_zero_outside_support():
    exp = build_prolate(10.0)
    values, derivative = eval_prolate(exp, np.array([-1.5, 1.0001, 3.0]))
    assert np.all(values == 0.0)
    assert np.all(derivative == 0.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=0.0, max_value=1.0))
def test_even(x):
    exp = build_prolate(12.024)
    assert exp(x) == pytest.approx(exp(-x), abs=1e-14)


def test_edge_value_decreases_with_bandwidth():
    values = [prolate_edge_value(c) for c in (4.0, 8.0, 12.0, 16.0)]
    assert all(a > b for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("xi", [0.0, 3.7, 12.024, 20.0])
def test_transform_matches_quadrature(xi):
    exp = build_prolate(12.024)
    expected, _ = quad(lambda x: exp(x) * np.cos(xi * x), -1.0, 1.0, epsabs=1e-13, limit=200)
    assert prolate_hat(exp, xi) == pytest.approx(expected, abs=1e-10)


def test_transform_at_zero_is_twice_the_half_integral():
    exp = build_prolate(9.5392)
    assert prolate_hat(exp, 0.0) == pytest.approx(2.0 * exp.integral, rel=1e-13)


def test_transform_keeps_shape():
    exp = build_prolate(9.5392)
    assert prolate_hat(exp, np.zeros((2, 3))).shape == (2, 3)


@pytest.mark.parametrize("c", [0.0, -1.0, float("inf")])
def test_rejects_bad_bandwidth(c):
    with pytest.raises(ParameterError):
        build_prolate(c)


def test_rejects_bad_tolerance():
    with pytest.raises(ParameterError):
        build_prolate(10.0, tol=1e-3)


@pytest.mark.parametrize("eps", [1e-9, 0.1])
def test_solve_c_rejects_out_of_range(eps):
    with pytest.raises(ParameterError):
        solve_c(eps)
