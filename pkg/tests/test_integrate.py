"""Tests for the shared quadrature rules."""

import math

import numpy as np
import pytest

from ptwigner.errors import ConvergenceError, GridError
from ptwigner.integrate import (
    adaptive_quad,
    compensated_sum,
    composite_gauss_legendre,
    gauss_jacobi_halfline,
    integrate_2d,
    simpson_weights,
)


def test_simpson_exact_for_cubics():
    x = np.linspace(0.0, 2.0, 11)
    w = simpson_weights(11, x[1] - x[0])
    assert np.dot(w, x ** 3 - x) == pytest.approx(2.0, abs=1e-13)


@pytest.mark.parametrize("n", [1, 4, 10])
def test_simpson_rejects_even_counts(n):
    with pytest.raises(GridError):
        simpson_weights(n, 0.1)


def test_compensated_sum_is_order_independent():
    values = np.array([1e16, 1.0, -1e16, 1.0])
    assert compensated_sum(values) == 2.0
    assert compensated_sum(values[::-1]) == 2.0


def test_integrate_2d_shape_checked():
    with pytest.raises(GridError):
        integrate_2d(np.ones((3, 4)), np.ones(3), np.ones(3))


def test_gauss_jacobi_carries_power_weight():
    x, w = gauss_jacobi_halfline(10, 3.0, 1.4)
    # ∫_0^3 x^2 · x^1.4 dx
    assert np.dot(w, x ** 2) == pytest.approx(3.0 ** 4.4 / 4.4, rel=1e-13)


def test_composite_legendre_skips_empty_intervals():
    nodes, weights = composite_gauss_legendre([0.0, 0.0, 2.5], max_panel=1.0, order=8)
    assert len(nodes) == 3 * 8
    assert np.sum(weights) == pytest.approx(2.5, rel=1e-14)
    assert np.dot(weights, np.exp(nodes)) == pytest.approx(math.expm1(2.5), rel=1e-13)


def test_adaptive_quad_endpoint_weight():
    value = adaptive_quad(lambda x: 1.0, 0.0, 1.0, epsabs=1e-13, endpoint_powers=(0.5, 0.0))
    assert value == pytest.approx(2.0 / 3.0, rel=1e-12)


def test_adaptive_quad_failure_is_convergence_error():
    with pytest.raises(ConvergenceError):
        adaptive_quad(lambda x: 1.0 / x, 0.0, 1.0, epsabs=1e-14)
