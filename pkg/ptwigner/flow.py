"""Wigner flow J = (J_x, J_p), continuity residuals, flux and circulation.

Flow quantities use the potential that enters the Hamiltonian. Passing a
PotentialSpec therefore means V(x) = V_eps(x)/2 (ħ = m = 1); any other
callable x -> V(x) is taken as is.

    J_x = p W
    J_p = (1/2π) ∫ dξ e^{iξp} ψ*(x+ξ/2) ψ(x−ξ/2)
              [(V(x−ξ/2) − V(x))/ξ − (V*(x+ξ/2) − V*(x))/ξ]
    ∂W/∂t + ∂_x J_x + ∂_p J_p = 2 Im V W
"""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numpy.polynomial import Polynomial

from .errors import ConvergenceError, GridError, RealnessError
from .hamiltonian import PotentialSpec, assemble, potential_eval
from .integrate import (
    compensated_sum,
    composite_gauss_legendre,
    gauss_jacobi_halfline,
    gauss_legendre,
    integrate_2d,
    simpson_weights,
)
from .spectrum import default_workers, eigendecompose, point_error
from .wigner import PhaseGrid, WignerField, check_coeffs, wavefunction, wigner_from_coeffs, wigner_values

logger = logging.getLogger(__name__)

Potential = Union[PotentialSpec, Callable[[np.ndarray], np.ndarray]]

JP_TOL = 1e-11
JP_REALNESS_TOL = 1e-10
JP_INITIAL_ORDER = 12
JP_MAX_ORDER = 192
JP_MAX_PANEL = 1.0
XI_MARGIN = 14.0
SUPPORT_TOL = 1e-10
INTERIOR_MARGIN = 2

CIRCULATION_TOL = 1e-8
CIRCULATION_R_STEP = 2.0
CIRCULATION_R_MAX = 40.0
CIRCULATION_MIN_R = 5.0
JACOBI_NODES_PER_UNIT = 8
CIRCULATION_P_STEP = 0.1


def hamiltonian_potential(potential: Potential) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(potential, PotentialSpec):
        spec = potential
        return lambda x: 0.5 * np.asarray(potential_eval(spec, x))
    return potential


@dataclass(frozen=True)
class FlowField:
    grid: PhaseGrid
    jx: np.ndarray = field(repr=False)
    jp: np.ndarray = field(repr=False)
    norm: np.ndarray = field(repr=False)

    @classmethod
    def from_components(cls, grid: PhaseGrid, jx: np.ndarray, jp: np.ndarray) -> FlowField:
        if jx.shape != grid.shape or jp.shape != grid.shape:
            raise GridError(f"flow components {jx.shape}, {jp.shape} do not match grid {grid.shape}")
        return cls(grid=grid, jx=jx, jp=jp, norm=np.hypot(jx, jp))


@dataclass(frozen=True)
class ContinuityResidual:
    values: np.ndarray = field(repr=False)
    interior_max: float


@dataclass(frozen=True)
class CirculationResult:
    epsilon: float
    state_index: int | None
    R: float
    value: float
    growth_history: tuple[tuple[float, float], ...]
    energy: complex = 0j
    include_dwdt: bool = False


# ── J_x and J_p ───────────────────────────────────────────────────────────


def jx_field(w: WignerField) -> np.ndarray:
    """J_x = p W (m = 1)."""
    return w.values * w.grid.p[None, :]


def _xi_rule(x: float, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss–Legendre in ξ, split where V(x ± ξ/2) hits the origin, mirrored about ξ = 0."""
    cutoff = 2.0 * (abs(x) + XI_MARGIN)
    nodes, weights = composite_gauss_legendre(
        [0.0, 2.0 * abs(x), cutoff], max_panel=JP_MAX_PANEL, order=order,
    )
    return np.concatenate([-nodes[::-1], nodes]), np.concatenate([weights[::-1], weights])


def _jp_row(c: np.ndarray, V: Callable, x: float, p: np.ndarray, order: int) -> np.ndarray:
    xi, wt = _xi_rule(x, order)
    rho = np.conj(wavefunction(c, x + 0.5 * xi)) * wavefunction(c, x - 0.5 * xi)
    v0 = complex(np.asarray(V(np.array([x])))[0])
    bracket = (
        (np.asarray(V(x - 0.5 * xi)) - v0)
        - (np.conj(np.asarray(V(x + 0.5 * xi))) - np.conj(v0))
    ) / xi
    phase = np.exp(1j * np.outer(xi, p))
    return (wt * rho * bracket) @ phase / (2.0 * math.pi)


def jp_field(coeffs: np.ndarray, potential: Potential, grid: PhaseGrid) -> np.ndarray:
    """J_p on the grid by direct ξ-quadrature, order doubled until stable to 1e−11."""
    c = check_coeffs(coeffs)
    V = hamiltonian_potential(potential)
    x_nodes = grid.x
    p_nodes = grid.p

    t0 = time.time()
    order = JP_INITIAL_ORDER
    last = np.array([_jp_row(c, V, x, p_nodes, order) for x in x_nodes])
    diff = float("inf")
    while order < JP_MAX_ORDER:
        order *= 2
        current = np.array([_jp_row(c, V, x, p_nodes, order) for x in x_nodes])
        diff = float(np.max(np.abs(current - last)))
        last = current
        if diff <= JP_TOL:
            break
    else:
        raise ConvergenceError(f"J_p quadrature not converged at order {order} (last change {diff:.3e})")

    residue = float(np.max(np.abs(last.imag)))
    if residue > JP_REALNESS_TOL:
        raise RealnessError(f"J_p imaginary residue {residue:.3e} exceeds {JP_REALNESS_TOL}")
    logger.debug("J_p on %dx%d grid (order %d) in %.2fs", grid.n_x, grid.n_p, order, time.time() - t0)
    return last.real


def _spectral_p_derivative(values: np.ndarray, h: float, order: int) -> np.ndarray:
    if order == 0:
        return values
    n = values.shape[1]
    k = 2.0 * math.pi * np.fft.fftfreq(n, d=h)
    return np.fft.ifft((1j * k[None, :]) ** order * np.fft.fft(values, axis=1), axis=1).real


def jp_series(
    coeffs: np.ndarray,
    potential: PotentialSpec,
    grid: PhaseGrid,
    j_max: int,
) -> np.ndarray:
    """Moyal series for J_p, exact for polynomial potentials once j_max >= deg V.

        J_p = −Σ_{j=1}^{j_max} (−i)^{j−1} / (j! 2^j) [V*^(j) + (−1)^{j−1} V^(j)] ∂_p^{j−1} W

    Only even-integer eps are accepted; elsewhere V is not a polynomial and the
    series does not converge.
    """
    if not potential.is_even_integer:
        raise ValueError(f"jp_series needs an even-integer eps, got {potential.epsilon}")
    if j_max < 1:
        raise ValueError(f"j_max must be >= 1, got {j_max}")
    degree = int(potential.epsilon)
    poly_coeffs = np.zeros(degree + 1)
    poly_coeffs[degree] = -0.5 * potential.cos_factor
    V = Polynomial(poly_coeffs)

    w = wigner_from_coeffs(coeffs, grid).values
    x = grid.x
    total = np.zeros(grid.shape, dtype=complex)
    for j in range(1, j_max + 1):
        dv = V.deriv(j)(x)
        bracket = np.conj(dv) + (-1) ** (j - 1) * dv
        if not np.any(bracket):
            continue
        factor = (-1j) ** (j - 1) / (math.factorial(j) * 2 ** j)
        total -= factor * bracket[:, None] * _spectral_p_derivative(w, grid.hp, j - 1)
    return total.real


def flow_field(
    coeffs: np.ndarray,
    potential: Potential,
    grid: PhaseGrid,
    *,
    energy: complex = 0j,
    state_index: int | None = None,
) -> tuple[WignerField, FlowField]:
    """W together with (J_x, J_p, N_J) for one state."""
    t0 = time.time()
    w = wigner_from_coeffs(coeffs, grid, energy=energy, state_index=state_index)
    flow = FlowField.from_components(grid, jx_field(w), jp_field(coeffs, potential, grid))
    logger.info("Flow field %dx%d in %.1fs", grid.n_x, grid.n_p, time.time() - t0)
    return w, flow


# ── Continuity equation ───────────────────────────────────────────────────


def fd_derivative(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Fourth-order finite difference: central inside, one-sided on the two edge nodes."""
    f = np.moveaxis(values, axis, 0)
    n = f.shape[0]
    if n < 5:
        raise GridError(f"fourth-order stencil needs >= 5 nodes, got {n}")
    d = np.empty_like(f, dtype=float)
    d[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h)
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h)
    d[-1] = (25.0 * f[-1] - 48.0 * f[-2] + 36.0 * f[-3] - 16.0 * f[-4] + 3.0 * f[-5]) / (12.0 * h)
    d[-2] = (3.0 * f[-1] + 10.0 * f[-2] - 18.0 * f[-3] + 6.0 * f[-4] - f[-5]) / (12.0 * h)
    return np.moveaxis(d, 0, axis)


def continuity_residual(w: WignerField, flow: FlowField, potential: Potential) -> ContinuityResidual:
    """2 Im E W + ∂_x J_x + ∂_p J_p − 2 Im V W, with ∂W/∂t = 2 Im E W for the stationary source."""
    grid = w.grid
    if flow.grid != grid:
        raise GridError(f"grid mismatch: {flow.grid} vs {grid}")
    V = hamiltonian_potential(potential)
    im_v = np.imag(np.asarray(V(grid.x), dtype=complex))
    residual = (
        2.0 * w.energy.imag * w.values
        + fd_derivative(flow.jx, grid.hx, axis=0)
        + fd_derivative(flow.jp, grid.hp, axis=1)
        - 2.0 * im_v[:, None] * w.values
    )
    m = INTERIOR_MARGIN
    interior = float(np.max(np.abs(residual[m:-m, m:-m])))
    return ContinuityResidual(values=residual, interior_max=interior)


# ── Flux and circulation ──────────────────────────────────────────────────


def flux_density(w: WignerField, potential: Potential) -> np.ndarray:
    """2 W Im V."""
    V = hamiltonian_potential(potential)
    im_v = np.imag(np.asarray(V(w.grid.x), dtype=complex))
    return 2.0 * w.values * im_v[:, None]


def flux(w: WignerField, potential: Potential) -> float:
    """∬ 2 W Im V dx dp by compensated 2-D Simpson; the grid must cover the state's support."""
    edge = w.boundary_max()
    if edge >= SUPPORT_TOL:
        raise GridError(f"grid does not cover the state's support: boundary max |W| = {edge:.3e}")
    g = w.grid
    return integrate_2d(flux_density(w, potential), simpson_weights(g.n_x, g.hx), simpson_weights(g.n_p, g.hp))


def _p_marginals(c: np.ndarray, x: np.ndarray, R: float, p_step: float) -> np.ndarray:
    """∫_{−R}^{R} W(x, p) dp for each x, composite Simpson in p, compensated."""
    n_p = 2 * math.ceil(R / p_step) + 1
    p = np.linspace(-R, R, n_p)
    weights = simpson_weights(n_p, p[1] - p[0])
    values, _ = wigner_values(c, x[:, None], p[None, :])
    return np.array([compensated_sum(weights * row) for row in values])


def _circulation_estimate(
    c: np.ndarray, spec: PotentialSpec, energy: complex, R: float, density: int, p_step: float,
    include_dwdt: bool,
) -> float:
    n_nodes = max(8, math.ceil(density * R))
    y, wy = gauss_jacobi_halfline(n_nodes, R, spec.epsilon)
    # Im(V_eps/2) = −sgn(x) |x|^eps sin(eps π/2) / 2, so 2 Im V carries −sin on x > 0.
    odd_part = _p_marginals(c, y, R, p_step) - _p_marginals(c, -y, R, p_step)
    value = -spec.sin_factor * compensated_sum(wy * odd_part)
    if include_dwdt and energy.imag != 0.0:
        x, wx = gauss_legendre(2 * n_nodes, -R, R)
        mass = compensated_sum(wx * _p_marginals(c, x, R, p_step))
        value -= 2.0 * energy.imag * mass
    return value


def circulation(
    coeffs: np.ndarray,
    energy: complex,
    potential: PotentialSpec,
    R_init: float = CIRCULATION_MIN_R,
    *,
    include_dwdt: bool = False,
    state_index: int | None = None,
) -> CirculationResult:
    """∬_{[−R,R]²} (2 W Im V − ∂W/∂t) dx dp, growing R by 2 until stable to 1e−8.

    With include_dwdt=False the t = 0 snapshot is integrated (∂W/∂t ≡ 0);
    with True the stationary rate 2 Im E W is subtracted. The x-integral uses
    Gauss–Jacobi nodes carrying the |x|^eps weight of Im V on each half-line,
    the p-integral composite Simpson. Once R has settled, the node density is
    doubled once to confirm the value.
    """
    if R_init < CIRCULATION_MIN_R:
        raise ValueError(f"R_init must be >= {CIRCULATION_MIN_R}, got {R_init}")
    c = check_coeffs(coeffs)
    energy = complex(energy)

    t0 = time.time()
    density = JACOBI_NODES_PER_UNIT
    p_step = CIRCULATION_P_STEP
    R = float(R_init)
    history: list[tuple[float, float]] = []
    last = _circulation_estimate(c, potential, energy, R, density, p_step, include_dwdt)
    history.append((R, last))
    diff = float("inf")
    while R + CIRCULATION_R_STEP <= CIRCULATION_R_MAX:
        R += CIRCULATION_R_STEP
        value = _circulation_estimate(c, potential, energy, R, density, p_step, include_dwdt)
        history.append((R, value))
        diff = abs(value - last)
        last = value
        if diff > CIRCULATION_TOL:
            continue
        confirm = _circulation_estimate(c, potential, energy, R, 2 * density, 0.5 * p_step, include_dwdt)
        if abs(confirm - value) <= CIRCULATION_TOL:
            logger.info(
                "Circulation eps=%.5f state=%s: %.6e at R=%.0f in %.1fs",
                potential.epsilon, state_index, value, R, time.time() - t0,
            )
            return CirculationResult(
                epsilon=potential.epsilon, state_index=state_index, R=R, value=value,
                growth_history=tuple(history), energy=energy, include_dwdt=include_dwdt,
            )
        logger.warning("[eps=%.5f] density doubling moved circulation by %.3e; refining",
                       potential.epsilon, abs(confirm - value))
        density *= 2
        p_step *= 0.5
        last = confirm
    raise ConvergenceError(
        f"Circulation at eps={potential.epsilon} not converged by R={CIRCULATION_R_MAX} (last change {diff:.3e})"
    )


def circulation_sweep(
    eps_values: Sequence[float],
    n_max: int,
    state_index: int = 1,
    R_init: float = CIRCULATION_MIN_R,
    *,
    include_dwdt: bool = False,
    workers: int | None = None,
    errors: list[dict] | None = None,
) -> list[CirculationResult]:
    """Circulation of one eigenstate across eps, solved concurrently and returned in input order.

    With an `errors` list, points that fail to converge are skipped and
    reported there, as in spectrum.sweep.
    """
    eps_list = [float(e) for e in eps_values]
    if not eps_list:
        raise ValueError("eps_values must be non-empty")

    def solve(eps: float) -> CirculationResult:
        spectrum = eigendecompose(assemble(eps, n_max))
        if not 0 <= state_index < len(spectrum.pairs):
            raise ValueError(f"state_index {state_index} outside spectrum of size {len(spectrum.pairs)}")
        pair = spectrum.pairs[state_index]
        try:
            return circulation(
                pair.coeffs, pair.value, PotentialSpec(eps), R_init,
                include_dwdt=include_dwdt, state_index=state_index,
            )
        except ConvergenceError as exc:
            raise ConvergenceError(f"eps={eps}: {exc}") from exc

    def guarded(eps: float) -> CirculationResult | Exception:
        try:
            return solve(eps)
        except (ConvergenceError, RealnessError) as exc:
            if errors is None:
                raise
            return exc

    max_workers = workers or default_workers(len(eps_list))
    if max_workers <= 1 or len(eps_list) == 1:
        outcomes = [guarded(e) for e in eps_list]
    else:
        logger.info("Circulation at %d eps points in parallel (max_workers=%d)", len(eps_list), max_workers)
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            futures = [executor.submit(guarded, e) for e in eps_list]
            outcomes = [f.result() for f in futures]

    results: list[CirculationResult] = []
    for eps, outcome in zip(eps_list, outcomes):
        if isinstance(outcome, Exception):
            logger.error("[eps=%.6g] point skipped: %s", eps, outcome)
            errors.append(point_error(eps, outcome))
        else:
            results.append(outcome)
    return results
