"""Tests for the special-function kernel."""

import math
from fractions import Fraction

import numpy as np
import pytest
from numpy.polynomial import hermite
from scipy import integrate

from ptwigner.errors import SpecialFunctionDomainError
from ptwigner.integrate import adaptive_quad, gauss_legendre
from ptwigner.specfun import (
    LauricellaArgs,
    double_factorial,
    erdelyi_halfline,
    erdelyi_halfline_quad,
    hermite_poly,
    lauricella_fa2,
    lauricella_fa2_exact,
    log_gamma,
    normalized_halfline,
    oscillator_basis,
    oscillator_eigenfunction,
    oscillator_pair_product,
    pochhammer,
)


def _rising(x: Fraction, k: int) -> Fraction:
    out = Fraction(1)
    for t in range(k):
        out *= x + t
    return out


def _fa2_fraction(a: float, r: int, s: int, c1: float, c2: float) -> Fraction:
    """Direct rational double sum, with float parameters taken at their exact binary values."""
    fa, fc1, fc2 = Fraction(a), Fraction(c1), Fraction(c2)
    total = Fraction(0)
    for i in range(r + 1):
        for j in range(s + 1):
            num = _rising(fa, i + j) * _rising(Fraction(-r), i) * _rising(Fraction(-s), j)
            den = _rising(fc1, i) * _rising(fc2, j) * math.factorial(i) * math.factorial(j)
            total += num / den
    return total


def _position_matrix(size: int) -> np.ndarray:
    """x = (a + a†)/√2 on the first `size` Fock states."""
    off = np.sqrt(np.arange(1, size) / 2.0)
    return np.diag(off, 1) + np.diag(off, -1)


# ── Hermite polynomials and eigenfunctions ────────────────────────────────


class TestHermite:
    def test_low_orders(self):
        assert hermite_poly(0, 1.7) == 1.0
        assert hermite_poly(3, 1.0) == pytest.approx(-4.0)
        assert hermite_poly(2, 0.5) == pytest.approx(-1.0)

    @pytest.mark.parametrize("n", [5, 10, 25])
    def test_matches_numpy_series(self, n):
        x = np.linspace(-3.0, 3.0, 13)
        expected = hermite.hermval(x, [0] * n + [1])
        np.testing.assert_allclose(hermite_poly(n, x), expected, rtol=1e-12, atol=1e-12)

    def test_rejects_out_of_range(self):
        with pytest.raises(SpecialFunctionDomainError):
            hermite_poly(101, 0.0)
        with pytest.raises(SpecialFunctionDomainError):
            hermite_poly(5, 25.0)
        with pytest.raises(SpecialFunctionDomainError):
            hermite_poly(-1, 0.0)


class TestEigenfunctions:
    def test_ground_state_at_origin(self):
        assert oscillator_eigenfunction(0, 0.0) == pytest.approx(math.pi ** -0.25)
        assert oscillator_eigenfunction(1, 0.0) == 0.0

    def test_normalization(self):
        value, _ = integrate.quad(
            lambda x: oscillator_eigenfunction(7, x) ** 2, -20.0, 20.0,
            points=[0.0], epsabs=1e-13, epsrel=1e-13, limit=200,
        )
        assert value == pytest.approx(1.0, abs=1e-10)

    def test_orthonormality(self):
        nodes, weights = gauss_legendre(400, -20.0, 20.0)
        basis = oscillator_basis(31, nodes)
        gram = (basis * weights) @ basis.T
        np.testing.assert_allclose(gram, np.eye(31), atol=1e-9)

    def test_high_index_matches_log_form(self):
        x = 3.0
        n = 100
        log_norm = 0.5 * (n * math.log(2.0) + math.lgamma(n + 1) + 0.5 * math.log(math.pi))
        h = hermite_poly(n, x)
        expected = math.copysign(math.exp(math.log(abs(h)) - 0.5 * x * x - log_norm), h)
        assert oscillator_eigenfunction(n, x) == pytest.approx(expected, rel=1e-10)

    def test_pair_product_matches_basis(self):
        for x in (-4.2, -0.3, 0.0, 1.1, 9.5):
            basis = oscillator_basis(41, x)
            assert oscillator_pair_product(40, 17, x) == pytest.approx(basis[40] * basis[17], rel=1e-12, abs=1e-300)

    def test_far_tail_does_not_overflow(self):
        values = oscillator_basis(72, np.array([30.0, -30.0]))
        assert np.all(np.isfinite(values))


# ── Gamma family ──────────────────────────────────────────────────────────


class TestGammaFamily:
    def test_log_gamma_half_integer(self):
        expected = math.log(math.sqrt(math.pi) * math.prod(0.5 + k for k in range(7)))
        assert log_gamma(7.5) == pytest.approx(expected, rel=1e-14)

    def test_log_gamma_integer_is_log_factorial(self):
        assert log_gamma(11.0) == pytest.approx(math.log(math.factorial(10)), rel=1e-14)

    def test_log_gamma_rejects_poles(self):
        with pytest.raises(SpecialFunctionDomainError):
            log_gamma(0.0)
        with pytest.raises(SpecialFunctionDomainError):
            log_gamma(-2.0)

    def test_pochhammer(self):
        assert pochhammer(3.7, 0) == 1.0
        assert pochhammer(0.5, 3) == pytest.approx(1.875)
        with pytest.raises(SpecialFunctionDomainError):
            pochhammer(1.0, -1)

    def test_double_factorial(self):
        assert double_factorial(-1) == 1.0
        assert double_factorial(0) == 1.0
        assert double_factorial(7) == 105.0
        assert double_factorial(8) == 384.0


# ── Lauricella F_A ────────────────────────────────────────────────────────


class TestLauricella:
    @pytest.mark.parametrize("a,c1,c2", [(0.7, 0.5, 0.5), (2.1, 1.5, 0.5), (3.0, 1.5, 1.5)])
    def test_trivial_orders(self, a, c1, c2):
        assert lauricella_fa2(LauricellaArgs(a=a, r=0, s=0, c1=c1, c2=c2)) == 1.0

    def test_single_term_order(self):
        # 1 + (a)(-1)/c1 with a = 1.5, c1 = 1/2
        assert lauricella_fa2(LauricellaArgs(a=1.5, r=1, s=0, c1=0.5, c2=0.5)) == pytest.approx(-2.0)

    def test_matches_rational_sum(self):
        eps = 1.3
        a = 0.5 * (eps + 1)
        exact = _fa2_fraction(a, 2, 1, 0.5, 0.5)
        assert lauricella_fa2(LauricellaArgs(a=a, r=2, s=1, c1=0.5, c2=0.5)) == pytest.approx(float(exact), rel=1e-14)

    @pytest.mark.parametrize("a,r,s,c1,c2", [(2.5, 10, 10, 0.5, 0.5), (1.0, 20, 15, 0.5, 1.5), (3.5, 30, 30, 1.5, 1.5)])
    def test_cancelling_sums_match_exact_path(self, a, r, s, c1, c2):
        args = LauricellaArgs(a=a, r=r, s=s, c1=c1, c2=c2)
        exact = lauricella_fa2_exact(args)
        assert exact == _fa2_fraction(a, r, s, c1, c2)
        assert lauricella_fa2(args) == pytest.approx(float(exact), rel=1e-12)

    def test_exact_path_needs_integer_2a(self):
        with pytest.raises(SpecialFunctionDomainError):
            lauricella_fa2_exact(LauricellaArgs(a=1.15, r=1, s=1, c1=0.5, c2=0.5))

    @pytest.mark.parametrize("kwargs", [
        dict(a=1.0, r=61, s=0, c1=0.5, c2=0.5),
        dict(a=1.0, r=-1, s=0, c1=0.5, c2=0.5),
        dict(a=1.0, r=1, s=1, c1=0.0, c2=0.5),
        dict(a=-0.5, r=1, s=1, c1=0.5, c2=0.5),
    ])
    def test_invalid_parameters(self, kwargs):
        with pytest.raises(SpecialFunctionDomainError):
            LauricellaArgs(**kwargs)


# ── Erdélyi half-line integrals ───────────────────────────────────────────


class TestErdelyi:
    def test_closed_form_known_values(self):
        assert erdelyi_halfline(0, 0, 2.0) == pytest.approx(math.sqrt(math.pi) / 4, rel=1e-14)
        assert erdelyi_halfline(0, 1, 1.0) == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-14)

    @pytest.mark.parametrize("mu,nu,eps", [(4, 2, 1.42207), (3, 5, 0.5), (6, 6, 2.7), (0, 9, 1.0)])
    def test_matches_quadrature(self, mu, nu, eps):
        closed = erdelyi_halfline(mu, nu, eps)
        assert closed == pytest.approx(erdelyi_halfline_quad(mu, nu, eps), rel=1e-10)

    def test_symmetric_in_indices(self):
        assert erdelyi_halfline(7, 4, 1.5) == erdelyi_halfline(4, 7, 1.5)

    def test_rejects_nonpositive_eps(self):
        with pytest.raises(SpecialFunctionDomainError):
            erdelyi_halfline(1, 1, 0.0)

    @pytest.mark.parametrize("mu,nu", [(0, 0), (0, 29), (0, 30), (3, 8), (12, 30), (29, 29), (29, 30), (30, 30)])
    @pytest.mark.parametrize("eps", [0.5, 1.0, 1.42207, 1.7, 2.0, 2.5, 3.0])
    def test_left_half_line_is_parity_image(self, mu, nu, eps):
        def product(x: float) -> float:
            return oscillator_pair_product(mu, nu, x)

        cutoff = 12.0 + math.sqrt(mu + nu)
        left = adaptive_quad(product, -cutoff, 0.0, epsabs=1e-13, endpoint_powers=(0.0, eps))
        right = adaptive_quad(product, 0.0, cutoff, epsabs=1e-13, endpoint_powers=(eps, 0.0))
        assert left == pytest.approx((-1) ** (mu + nu) * right, abs=1e-10)

    def test_even_eps_moments_match_ladder_algebra(self):
        x4 = np.linalg.matrix_power(_position_matrix(40), 4)
        for mu in range(0, 21):
            for nu in range(mu, 21, 2):
                assert normalized_halfline(mu, nu, 4.0) == pytest.approx(0.5 * x4[mu, nu], abs=1e-11)

    def test_normalized_series_at_high_index(self):
        def product(x: float) -> float:
            return oscillator_pair_product(70, 68, x)

        expected = adaptive_quad(product, 0.0, 12.0 + math.sqrt(138), epsabs=1e-13, endpoint_powers=(1.5, 0.0))
        assert normalized_halfline(70, 68, 1.5) == pytest.approx(expected, abs=1e-10)
