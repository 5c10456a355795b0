"""Oracle cross-checks run by the `validate` command."""

from __future__ import annotations

import logging
import time
from collections.abc import Callable
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import PtWignerError
from .flow import circulation, continuity_residual, flow_field
from .hamiltonian import PotentialSpec, assemble, potential_element_closed, potential_element_quad
from .spectrum import Classification, eigendecompose, find_ep
from .wigner import PhaseGrid, symmetry_diagnostics, wigner_from_coeffs, wigner_quad, wigner_values

logger = logging.getLogger(__name__)

EP_REFERENCE = 1.42207
ORACLE_EPS = (0.5, 1.0, 1.42207, 1.5, 2.0, 2.5, 3.0)
ORACLE_MAX_INDEX = 20
WIGNER_POINTS = 100
WIGNER_STATES = 5
RNG_SEED = 20240611
EP_TRUNCATIONS = (51, 71)
EP_APPROACH = (0.05, 0.02, 0.01, 0.005)
REALITY_N_MAX = 31


@dataclass(frozen=True)
class CheckResult:
    check: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def as_row(self) -> dict:
        return {
            "check": self.check, "passed": self.passed, "value": self.value,
            "threshold": self.threshold, "detail": self.detail,
        }


def _fock(n: int, size: int) -> np.ndarray:
    c = np.zeros(size, dtype=complex)
    c[n] = 1.0
    return c


# ── Individual checks ─────────────────────────────────────────────────────


def check_matrix_elements(n_max: int) -> CheckResult:
    worst = 0.0
    where = ""
    for eps in ORACLE_EPS:
        for n in range(ORACLE_MAX_INDEX + 1):
            for m in range(n, ORACLE_MAX_INDEX + 1):
                err = abs(potential_element_closed(n, m, eps) - potential_element_quad(n, m, eps))
                if err > worst:
                    worst, where = err, f"(n={n}, m={m}, eps={eps})"
    return CheckResult("matrix_elements_vs_quadrature", worst <= 1e-8, worst, 1e-8, f"worst at {where}")


def check_ho_spectrum(n_max: int) -> CheckResult:
    values = eigendecompose(assemble(2.0, n_max)).values[:11]
    err = float(np.max(np.abs(values - (np.arange(11) + 0.5))))
    return CheckResult("eps2_spectrum", err <= 1e-8, err, 1e-8, "E_n = n + 1/2 for n <= 10")


def check_wigner_oracle(n_max: int) -> CheckResult:
    rng = np.random.default_rng(RNG_SEED)
    spectrum = eigendecompose(assemble(1.5, n_max))
    points = rng.uniform(-3.0, 3.0, size=(WIGNER_POINTS, 2))
    worst = 0.0
    for k in range(WIGNER_STATES):
        c = spectrum.pairs[k].coeffs
        closed, _ = wigner_values(c, points[:, 0], points[:, 1])
        for (x, p), w in zip(points, closed):
            worst = max(worst, abs(w - wigner_quad(c, float(x), float(p))))
    return CheckResult("wigner_vs_quadrature", worst <= 1e-8, worst, 1e-8,
                       f"{WIGNER_STATES} states at eps=1.5, {WIGNER_POINTS} points")


def check_normalization(n_max: int) -> CheckResult:
    spectrum = eigendecompose(assemble(1.5, n_max))
    grid = PhaseGrid.square(7.0, 281)
    worst = 0.0
    residue = 0.0
    for k in range(WIGNER_STATES):
        w = wigner_from_coeffs(spectrum.pairs[k].coeffs, grid)
        worst = max(worst, abs(w.integral() - 1.0))
        residue = max(residue, w.imag_residue)
    return CheckResult("wigner_normalization", worst <= 1e-6, worst, 1e-6,
                       f"max imaginary residue {residue:.2e}")


def check_flow_circularity(n_max: int) -> CheckResult:
    grid = PhaseGrid.default()
    c = _fock(1, 2)
    w, flow = flow_field(c, PotentialSpec(2.0), grid)
    err = float(np.max(np.abs(flow.jp + grid.x[:, None] * w.values)))
    pw = grid.p[None, :] * w.values
    mask = np.abs(pw) > 1e-14
    signs_ok = bool(np.all(np.sign(flow.jx[mask]) == np.sign(pw[mask])))
    return CheckResult("eps2_flow_circularity", err <= 1e-9 and signs_ok, err, 1e-9,
                       f"sign(J_x) = sign(pW): {signs_ok}")


def check_continuity(n_max: int) -> CheckResult:
    c = _fock(1, 2)
    spec = PotentialSpec(2.0)
    coarse = PhaseGrid.square(6.0, 97)
    residuals = []
    for grid in (coarse, coarse.refined()):
        w, flow = flow_field(c, spec, grid, energy=1.5)
        residuals.append(continuity_residual(w, flow, spec).interior_max)
    ratio = residuals[0] / max(residuals[1], np.finfo(float).tiny)
    return CheckResult("continuity_fourth_order", ratio >= 12.0, ratio, 12.0,
                       f"interior residuals {residuals[0]:.3e} -> {residuals[1]:.3e}")


def check_continuity_unbroken(n_max: int) -> CheckResult:
    # The truncated eigenvector leaves a grid-independent defect, so compare successive differences.
    pair = eigendecompose(assemble(1.5, n_max)).pairs[1]
    spec = PotentialSpec(1.5)
    grid = PhaseGrid.square(4.0, 33)
    levels = []
    for stride in (1, 2, 4):
        w, flow = flow_field(pair.coeffs, spec, grid, energy=pair.value)
        levels.append(continuity_residual(w, flow, spec).values[::stride, ::stride][2:-2, 2:-2])
        grid = grid.refined()
    first = float(np.max(np.abs(levels[0] - levels[1])))
    second = float(np.max(np.abs(levels[1] - levels[2])))
    ratio = first / max(second, np.finfo(float).tiny)
    return CheckResult("continuity_fourth_order_eps1.5", ratio >= 12.0, ratio, 12.0,
                       f"successive differences {first:.3e} -> {second:.3e}")


def check_reality_counts(n_max: int) -> CheckResult:
    low = eigendecompose(assemble(1.0, REALITY_N_MAX)).pairs[:10]
    high = eigendecompose(assemble(3.0, n_max)).pairs[:6]
    real_low = sum(p.classification is Classification.REAL for p in low)
    real_high = sum(p.classification is Classification.REAL for p in high)
    passed = real_low == 1 and real_high == 6
    return CheckResult("reality_counts", passed, float(real_low), 1.0,
                       f"eps=1.0 (n_max={REALITY_N_MAX}): {real_low}/10 real; eps=3.0: {real_high}/6 real")


def check_symmetry(n_max: int) -> CheckResult:
    grid = PhaseGrid.default()
    unbroken = eigendecompose(assemble(1.5, n_max))
    x_defect = max(
        symmetry_diagnostics(wigner_from_coeffs(unbroken.pairs[k].coeffs, grid)).x_defect for k in (1, 2)
    )
    broken = eigendecompose(assemble(1.40, n_max))
    w1 = wigner_from_coeffs(broken.pairs[1].coeffs, grid)
    w2 = wigner_from_coeffs(broken.pairs[2].coeffs, grid)
    mirror = symmetry_diagnostics(w1, w2).mirror_defect
    fock = symmetry_diagnostics(wigner_from_coeffs(_fock(3, 4), grid))
    cylinder = max(fock.x_defect, fock.p_defect)
    passed = x_defect <= 1e-8 and mirror <= 1e-7 and cylinder <= 1e-10
    return CheckResult("symmetry", passed, max(x_defect, mirror, cylinder), 1e-7,
                       f"x-defect {x_defect:.2e}, mirror {mirror:.2e}, eps2 {cylinder:.2e}")


@lru_cache(maxsize=4)
def _ep_at(n_max: int) -> float:
    return find_ep((1, 2), (1.40, 1.45), n_max, 1e-5).eps_ep


@lru_cache(maxsize=32)
def _state1_circulation(eps: float, n_max: int) -> float:
    pair = eigendecompose(assemble(eps, n_max)).pairs[1]
    return circulation(pair.coeffs, pair.value, PotentialSpec(eps)).value


def check_ep_location(n_max: int) -> CheckResult:
    eps_ep = _ep_at(n_max)
    err = abs(eps_ep - EP_REFERENCE)
    return CheckResult("ep_location", err <= 1e-3, eps_ep, EP_REFERENCE, f"|eps_ep - {EP_REFERENCE}| = {err:.2e}")


def check_ep_truncation(n_max: int) -> CheckResult:
    lo, hi = EP_TRUNCATIONS
    gap = abs(_ep_at(lo) - _ep_at(hi))
    return CheckResult("ep_truncation_agreement", gap <= 1e-3, gap, 1e-3,
                       f"eps_ep at n_max={lo}: {_ep_at(lo):.6f}, n_max={hi}: {_ep_at(hi):.6f}")


def check_circulation_plateau(n_max: int) -> CheckResult:
    plateau = max(abs(_state1_circulation(e, n_max)) for e in (1.43, 1.5, 2.0))
    broken = [abs(_state1_circulation(e, n_max)) for e in (1.42, 1.40, 1.35, 1.30)]
    increasing = all(b > a for a, b in zip(broken, broken[1:])) and broken[0] > 0
    return CheckResult("circulation_plateau", plateau <= 1e-6 and increasing, plateau, 1e-6,
                       "broken-phase |C|: " + ", ".join(f"{b:.4e}" for b in broken))


def check_circulation_continuity(n_max: int) -> CheckResult:
    """|C(eps_EP - delta)| must shrink toward 0 as delta does."""
    magnitudes = [abs(_state1_circulation(round(EP_REFERENCE - d, 6), n_max)) for d in EP_APPROACH]
    shrinking = all(a > b for a, b in zip(magnitudes, magnitudes[1:]))
    ratio = magnitudes[-1] / max(magnitudes[0], np.finfo(float).tiny)
    return CheckResult("circulation_continuity", shrinking and ratio < 0.5, ratio, 0.5,
                       "|C| at delta " + ", ".join(f"{d}: {m:.4e}" for d, m in zip(EP_APPROACH, magnitudes)))


CHECKS: tuple[Callable[[int], CheckResult], ...] = (
    check_matrix_elements,
    check_ho_spectrum,
    check_wigner_oracle,
    check_normalization,
    check_flow_circularity,
    check_continuity,
    check_continuity_unbroken,
    check_reality_counts,
    check_symmetry,
    check_ep_location,
    check_ep_truncation,
    check_circulation_plateau,
    check_circulation_continuity,
)


def run_validation(n_max: int) -> list[CheckResult]:
    """Run every check; a check that raises is reported as failed with the error text."""
    results: list[CheckResult] = []
    for check in CHECKS:
        name = check.__name__.removeprefix("check_")
        logger.info("Running check %s …", name)
        t0 = time.time()
        try:
            result = check(n_max)
        except PtWignerError as exc:
            logger.error("Check %s raised after %.1fs: %s", name, time.time() - t0, exc)
            result = CheckResult(name, False, float("nan"), float("nan"), f"{type(exc).__name__}: {exc}")
        else:
            logger.info("Check %s %s in %.1fs (%s)", name, "passed" if result.passed else "FAILED",
                        time.time() - t0, result.detail)
        results.append(result)
    return results
