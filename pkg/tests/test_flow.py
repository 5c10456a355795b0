"""Tests for Wigner flow, continuity, flux and circulation."""

import math

import numpy as np
import pytest

from ptwigner import flow as flow_module
from ptwigner.errors import ConvergenceError, GridError
from ptwigner.hamiltonian import PotentialSpec
from ptwigner.flow import (
    CirculationResult,
    FlowField,
    circulation,
    circulation_sweep,
    continuity_residual,
    fd_derivative,
    flow_field,
    flux,
    jp_field,
    jp_series,
    jx_field,
)
from ptwigner.integrate import adaptive_quad
from ptwigner.wigner import PhaseGrid, WignerField, marginal_x, wigner_from_coeffs

from .helpers import fock

EP_REFERENCE = 1.42207
COARSE = PhaseGrid.square(4.0, 33)


def _superposition() -> np.ndarray:
    c = np.array([0.8, 0.3j, 0.0, -0.4, 0.2])
    return c / np.linalg.norm(c)


def _marginal_flux(pair, eps: float) -> float:
    """∫ |ψ(x)|² 2 Im(V_eps/2) dx on each half-line."""
    spec = PotentialSpec(eps)

    def density(x: float) -> float:
        return float(marginal_x(pair.coeffs, np.array([x]))[0]) * spec.imag(x)

    right = adaptive_quad(density, 0.0, 16.0, epsabs=1e-12)
    left = adaptive_quad(density, -16.0, 0.0, epsabs=1e-12)
    return right + left


class TestFlowComponents:
    def test_jx_is_momentum_weighted(self):
        w = wigner_from_coeffs(fock(0), COARSE)
        jx = jx_field(w)
        mid = COARSE.n_p // 2
        assert np.all(jx[:, mid] == 0.0)
        xx, pp = COARSE.mesh()
        np.testing.assert_allclose(jx, pp * np.exp(-(xx ** 2 + pp ** 2)) / math.pi, atol=1e-15)

    def test_harmonic_jp_is_linear_force(self):
        w = wigner_from_coeffs(fock(1), COARSE)
        jp = jp_field(fock(1), PotentialSpec(2.0), COARSE)
        np.testing.assert_allclose(jp, -COARSE.x[:, None] * w.values, atol=1e-9)

    def test_harmonic_flow_circulates(self):
        grid = PhaseGrid.square(4.0, 41)
        w, flow = flow_field(fock(1), PotentialSpec(2.0), grid)
        pw = grid.p[None, :] * w.values
        mask = np.abs(pw) > 1e-14
        assert np.all(np.sign(flow.jx[mask]) == np.sign(pw[mask]))
        np.testing.assert_allclose(flow.norm, np.hypot(flow.jx, flow.jp))

    def test_series_matches_quadrature_for_harmonic(self):
        c = _superposition()
        direct = jp_field(c, PotentialSpec(2.0), COARSE)
        series = jp_series(c, PotentialSpec(2.0), COARSE, j_max=1)
        np.testing.assert_allclose(series, direct, atol=1e-9)

    def test_series_matches_quadrature_for_quartic(self):
        grid = PhaseGrid(-3.0, 3.0, -7.0, 7.0, 33, 99)
        c = _superposition()
        direct = jp_field(c, PotentialSpec(4.0), grid)
        series = jp_series(c, PotentialSpec(4.0), grid, j_max=3)
        np.testing.assert_allclose(series, direct, atol=1e-6)

    def test_series_rejects_non_polynomial_potential(self):
        with pytest.raises(ValueError):
            jp_series(fock(1), PotentialSpec(1.5), COARSE, j_max=3)

    def test_components_checked_against_grid(self):
        with pytest.raises(GridError):
            FlowField.from_components(COARSE, np.zeros((3, 3)), np.zeros((3, 3)))

    def test_accepts_plain_callable_potential(self):
        c = fock(1)
        from_spec = jp_field(c, PotentialSpec(2.0), COARSE)
        from_callable = jp_field(c, lambda x: 0.5 * np.asarray(x) ** 2 + 0j, COARSE)
        np.testing.assert_allclose(from_callable, from_spec, atol=1e-12)


class TestContinuity:
    def test_stencil_exact_for_quartic_polynomial(self):
        x = np.linspace(-2.0, 2.0, 21)
        values = np.tile(x ** 4 - 3 * x ** 3 + x, (5, 1))
        derivative = fd_derivative(values, x[1] - x[0], axis=1)
        np.testing.assert_allclose(derivative, np.tile(4 * x ** 3 - 9 * x ** 2 + 1, (5, 1)), atol=1e-10)

    def test_stencil_needs_five_nodes(self):
        with pytest.raises(GridError):
            fd_derivative(np.zeros((4, 3)), 0.1, axis=0)

    def test_zero_field_has_zero_residual(self):
        zero = np.zeros(COARSE.shape)
        w = WignerField(grid=COARSE, values=zero)
        flow = FlowField.from_components(COARSE, zero, zero)
        residual = continuity_residual(w, flow, PotentialSpec(1.5))
        assert np.all(residual.values == 0.0)
        assert residual.interior_max == 0.0

    def test_harmonic_converges_at_fourth_order(self):
        spec = PotentialSpec(2.0)
        coarse = PhaseGrid.square(6.0, 97)
        residuals = []
        for grid in (coarse, coarse.refined()):
            w, flow = flow_field(fock(1), spec, grid, energy=1.5)
            residuals.append(continuity_residual(w, flow, spec).interior_max)
        assert residuals[0] / residuals[1] >= 12.0

    def test_grid_mismatch(self):
        w = wigner_from_coeffs(fock(1), COARSE)
        other = COARSE.refined()
        flow = FlowField.from_components(other, np.zeros(other.shape), np.zeros(other.shape))
        with pytest.raises(GridError):
            continuity_residual(w, flow, PotentialSpec(2.0))

    @pytest.mark.slow
    def test_unbroken_state_converges_at_fourth_order(self, spectrum_15):
        # The truncated eigenvector leaves a grid-independent defect, so compare successive differences.
        pair = spectrum_15.pairs[1]
        spec = PotentialSpec(1.5)
        grid = PhaseGrid.square(4.0, 33)
        residuals = []
        for _ in range(3):
            w, flow = flow_field(pair.coeffs, spec, grid, energy=pair.value)
            full = continuity_residual(w, flow, spec).values
            residuals.append(full)
            grid = grid.refined()
        # Restrict every level to the coarse interior nodes.
        coarse = [r[2:-2, 2:-2] for r in (residuals[0], residuals[1][::2, ::2], residuals[2][::4, ::4])]
        first = np.max(np.abs(coarse[0] - coarse[1]))
        second = np.max(np.abs(coarse[1] - coarse[2]))
        assert first / second >= 12.0


class TestFlux:
    def test_harmonic_flux_vanishes(self):
        w = wigner_from_coeffs(fock(1), PhaseGrid.square(9.0, 181))
        assert flux(w, PotentialSpec(2.0)) == 0.0

    def test_unbroken_flux_vanishes(self, spectrum_15):
        w = wigner_from_coeffs(spectrum_15.pairs[1].coeffs, PhaseGrid.square(14.0, 281))
        assert abs(flux(w, PotentialSpec(1.5))) <= 1e-9

    def test_broken_flux_nonzero(self, spectrum_140):
        pair = spectrum_140.pairs[1]
        w = wigner_from_coeffs(pair.coeffs, PhaseGrid.square(14.0, 281))
        value = flux(w, PotentialSpec(1.40))
        assert abs(value) > 1e-4
        assert math.copysign(1.0, value) == math.copysign(1.0, pair.value.imag)

    def test_requires_support_coverage(self):
        w = wigner_from_coeffs(fock(1), PhaseGrid.square(2.0, 41))
        with pytest.raises(GridError):
            flux(w, PotentialSpec(1.5))


class TestCirculation:
    def test_harmonic_state_has_none(self):
        result = circulation(fock(1), 1.5, PotentialSpec(2.0))
        assert result.value == 0.0
        assert result.growth_history[0][0] == 5.0

    def test_rejects_small_domain(self):
        with pytest.raises(ValueError):
            circulation(fock(1), 1.5, PotentialSpec(2.0), R_init=3.0)

    @pytest.mark.slow
    def test_unbroken_phase_plateau(self, spectrum_15):
        pair = spectrum_15.pairs[1]
        result = circulation(pair.coeffs, pair.value, PotentialSpec(1.5), state_index=1)
        assert abs(result.value) <= 1e-6
        assert result.R >= 7.0
        radii = [r for r, _ in result.growth_history]
        assert radii == sorted(radii)

    @pytest.mark.slow
    def test_broken_phase_matches_marginal_oracle(self, spectrum_140):
        pair = spectrum_140.pairs[1]
        result = circulation(pair.coeffs, pair.value, PotentialSpec(1.40), state_index=1)
        assert result.value == pytest.approx(_marginal_flux(pair, 1.40), abs=1e-6)
        assert result.value == pytest.approx(2.0 * pair.value.imag, abs=1e-6)

    @pytest.mark.slow
    def test_stationary_rate_cancels_flux(self, spectrum_140):
        pair = spectrum_140.pairs[1]
        result = circulation(pair.coeffs, pair.value, PotentialSpec(1.40), include_dwdt=True)
        assert abs(result.value) <= 1e-6
        assert result.include_dwdt

    @pytest.mark.slow
    def test_grows_away_from_ep(self):
        results = circulation_sweep([1.30, 1.35, 1.40, 1.42], 71, state_index=1)
        magnitudes = [abs(r.value) for r in results]
        assert [r.epsilon for r in results] == [1.30, 1.35, 1.40, 1.42]
        assert all(a > b for a, b in zip(magnitudes, magnitudes[1:]))
        assert magnitudes[-1] > 0.0

    @pytest.mark.slow
    def test_vanishes_above_ep(self):
        for result in circulation_sweep([1.43, 1.5, 2.0], 71, state_index=1):
            assert abs(result.value) <= 1e-6

    @pytest.mark.slow
    def test_continuous_at_ep(self):
        deltas = [0.05, 0.02, 0.01, 0.005]
        results = circulation_sweep([round(EP_REFERENCE - d, 6) for d in deltas], 71, state_index=1)
        magnitudes = [abs(r.value) for r in results]
        assert all(a > b for a, b in zip(magnitudes, magnitudes[1:]))
        assert magnitudes[-1] < 0.5 * magnitudes[0]

    def test_sweep_reports_failed_points(self, monkeypatch):
        def flaky(coeffs, energy, potential, R_init, *, include_dwdt, state_index):
            if potential.epsilon == 2.5:
                raise ConvergenceError("not converged by R=40")
            return CirculationResult(potential.epsilon, state_index, R_init, 0.0, ((R_init, 0.0),), energy)

        monkeypatch.setattr(flow_module, "circulation", flaky)
        errors: list[dict] = []
        results = circulation_sweep([2.0, 2.5, 3.0], 8, state_index=1, workers=1, errors=errors)
        assert [r.epsilon for r in results] == [2.0, 3.0]
        assert [e["source"] for e in errors] == ["eps=2.5"]
        assert "not converged" in errors[0]["message"]
        with pytest.raises(ConvergenceError):
            circulation_sweep([2.5], 8, state_index=1)

    def test_sweep_rejects_empty(self):
        with pytest.raises(ValueError):
            circulation_sweep([], 31)
