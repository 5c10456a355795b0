"""Eigendecomposition, real/conjugate-pair classification, eps sweeps and EP bisection."""

from __future__ import annotations

import logging
import os
import time
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
import scipy.linalg

from . import __version__
from .errors import ConvergenceError, InvalidBracketError, RealnessError
from .hamiltonian import HamiltonianMatrix, assemble
from .validators import check_spectrum

logger = logging.getLogger(__name__)

TOL_REAL = 1e-8
PAIR_TOL = 1e-6
RESIDUAL_TOL = 1e-10
BREAK_DISTANCE = 0.5
EP_INDICATOR_FACTOR = 10.0
MIN_EP_TOL = 1e-7
MAX_BISECTIONS = 60
DRIFT_LEVELS = 6
DRIFT_THRESHOLD = 1e-6
SORT_DECIMALS = 9


class Classification(str, Enum):
    REAL = "Real"
    PAIR = "PairMember"
    UNCLASSIFIED = "Unclassified"


@dataclass(frozen=True)
class EigenPair:
    value: complex
    coeffs: np.ndarray = field(repr=False)
    classification: Classification = Classification.UNCLASSIFIED
    partner: int | None = None


@dataclass(frozen=True)
class Spectrum:
    """All eigenpairs of one matrix, ascending by real part, ties by imaginary part."""

    epsilon: float
    n_max: int
    pairs: tuple[EigenPair, ...]

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.pairs], dtype=complex)

    def count(self, kind: Classification, levels: int | None = None) -> int:
        return sum(1 for p in self.pairs[:levels] if p.classification is kind)

    def labels(self) -> list[str]:
        return [p.classification.value for p in self.pairs]


@dataclass(frozen=True)
class SweepRecord:
    """One eps point of a sweep; branch_ids run parallel to spectrum.pairs."""

    epsilon: float
    n_max: int
    spectrum: Spectrum = field(repr=False)
    branch_ids: tuple[int, ...]
    circulation: float | None = None
    warnings: tuple[str, ...] = ()
    version: str = __version__


@dataclass(frozen=True)
class BranchAssignment:
    """previous_index[i] is the level of the previous spectrum continued by level i, or None for a break."""

    previous_index: tuple[int | None, ...]
    distances: tuple[float, ...]

    @property
    def breaks(self) -> tuple[int, ...]:
        return tuple(i for i, j in enumerate(self.previous_index) if j is None)


@dataclass(frozen=True)
class EpResult:
    eps_ep: float
    bracket: tuple[float, float]
    initial_bracket: tuple[float, float]
    branch_pair: tuple[int, int]
    n_max: int
    tol: float
    iterations: int


@dataclass(frozen=True)
class DriftRow:
    level: int
    n_max: int
    value: complex
    drift: float
    flagged: bool


@dataclass(frozen=True)
class DriftTable:
    epsilon: float
    n_max_list: tuple[int, ...]
    rows: tuple[DriftRow, ...]

    @property
    def flagged(self) -> tuple[DriftRow, ...]:
        return tuple(r for r in self.rows if r.flagged)


# ── Decomposition and classification ──────────────────────────────────────


def _fix_phase(vector: np.ndarray) -> np.ndarray:
    """Unit norm, largest-magnitude component real positive (first index on ties)."""
    v = vector / np.linalg.norm(vector)
    k = int(np.argmax(np.abs(v)))
    v = v * (abs(v[k]) / v[k])
    v[k] = abs(v[k])
    return v


def eigendecompose(matrix: HamiltonianMatrix, tol_real: float = TOL_REAL) -> Spectrum:
    """All eigenpairs of the dense matrix, phase-fixed, sorted and classified.

    LAPACK's zgeev reduces to upper Hessenberg form and runs the shifted QR
    iteration; its failure to converge surfaces as ConvergenceError.
    """
    t0 = time.time()
    entries = matrix.entries
    try:
        values, vectors = scipy.linalg.eig(entries)
    except scipy.linalg.LinAlgError as exc:
        raise ConvergenceError(f"Eigenvalue iteration failed for eps={matrix.epsilon}: {exc}") from exc

    bound = RESIDUAL_TOL * max(matrix.frobenius_norm, np.finfo(float).tiny)
    order = sorted(range(len(values)), key=lambda i: (round(values[i].real, SORT_DECIMALS), values[i].imag))
    pairs = []
    for i in order:
        v = _fix_phase(vectors[:, i])
        residual = float(np.linalg.norm(entries @ v - values[i] * v))
        if residual > bound:
            raise ConvergenceError(
                f"Eigenpair {values[i]:.6g} at eps={matrix.epsilon} has residual {residual:.3e} > {bound:.3e}"
            )
        v.flags.writeable = False
        pairs.append(EigenPair(value=complex(values[i]), coeffs=v))

    spectrum = classify(Spectrum(epsilon=matrix.epsilon, n_max=matrix.n_max, pairs=tuple(pairs)), tol_real)
    logger.debug("Diagonalized eps=%.5f, n_max=%d in %.3fs", matrix.epsilon, matrix.n_max, time.time() - t0)
    return spectrum


def classify(spectrum: Spectrum, tol_real: float = TOL_REAL) -> Spectrum:
    """Mark Real values, then greedily pair the rest with their closest conjugates."""
    values = spectrum.values
    labels = [Classification.UNCLASSIFIED] * len(values)
    partners: list[int | None] = [None] * len(values)

    for i, e in enumerate(values):
        if abs(e.imag) <= tol_real * max(1.0, abs(e)):
            labels[i] = Classification.REAL

    candidates = []
    open_idx = [i for i, lab in enumerate(labels) if lab is not Classification.REAL]
    for a in open_idx:
        for b in open_idx:
            if b <= a:
                continue
            d = abs(values[a] - np.conj(values[b]))
            if d <= PAIR_TOL * max(1.0, abs(values[a])):
                candidates.append((d, a, b))
    for _, a, b in sorted(candidates):
        if partners[a] is None and partners[b] is None:
            partners[a], partners[b] = b, a
            labels[a] = labels[b] = Classification.PAIR

    pairs = tuple(
        replace(p, classification=labels[i], partner=partners[i])
        for i, p in enumerate(spectrum.pairs)
    )
    return replace(spectrum, pairs=pairs)


# ── Sweeps and branch tracking ────────────────────────────────────────────


def track_branches(
    previous: Spectrum,
    current: Spectrum,
    max_distance: float = BREAK_DISTANCE,
) -> BranchAssignment:
    """Greedy global-minimum matching of current levels onto previous ones.

    Pairs are accepted in order of increasing distance, each level used at
    most once; levels left without a partner within max_distance are breaks.
    """
    if previous.n_max != current.n_max:
        raise ValueError(f"n_max mismatch: {previous.n_max} vs {current.n_max}")
    prev = previous.values
    cur = current.values
    dist = np.abs(cur[:, None] - prev[None, :])
    flat = np.argsort(dist, axis=None, kind="stable")

    matched: list[int | None] = [None] * len(cur)
    distances = [float("inf")] * len(cur)
    used_prev: set[int] = set()
    remaining = len(cur)
    for idx in flat:
        i, j = divmod(int(idx), len(prev))
        d = float(dist[i, j])
        if d > max_distance or remaining == 0:
            break
        if matched[i] is not None or j in used_prev:
            continue
        matched[i] = j
        distances[i] = d
        used_prev.add(j)
        remaining -= 1
    return BranchAssignment(previous_index=tuple(matched), distances=tuple(distances))


def default_workers(count: int) -> int:
    env = os.environ.get("PTWIGNER_WORKERS", "")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            logger.warning("Ignoring non-integer PTWIGNER_WORKERS=%r", env)
    return min(count, 4)


def point_error(eps: float, exc: Exception) -> dict:
    """Report row for an eps point that failed numerically."""
    return {"source": f"eps={eps:.6g}", "message": f"{type(exc).__name__}: {exc}"}


def _solve_point(eps: float, n_max: int, tol_real: float) -> tuple[Spectrum, tuple[str, ...]]:
    try:
        matrix = assemble(eps, n_max)
        spectrum = eigendecompose(matrix, tol_real)
    except ConvergenceError as exc:
        raise ConvergenceError(f"eps={eps}: {exc}") from exc
    _, warnings = check_spectrum(spectrum, f"eps={eps:.6g}", matrix)
    return spectrum, tuple(warnings)


def sweep(
    eps_values: Sequence[float],
    n_max: int,
    *,
    tol_real: float = TOL_REAL,
    workers: int | None = None,
    errors: list[dict] | None = None,
) -> list[SweepRecord]:
    """Spectra over ascending eps with continuous branch ids.

    eps points are solved concurrently and merged in input order; branch
    tracking then runs sequentially over the ordered spectra.

    Args:
        errors: When given, a point that raises ConvergenceError or
            RealnessError is left out of the result and reported here as a
            {"source", "message"} row instead of aborting the sweep.
    """
    eps_list = [float(e) for e in eps_values]
    if not eps_list:
        raise ValueError("eps_values must be non-empty")
    if any(e <= 0 for e in eps_list):
        raise ValueError("eps_values must all be > 0")
    if any(b <= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_values must be strictly ascending")

    t0 = time.time()
    def solve(eps: float):
        try:
            return _solve_point(eps, n_max, tol_real)
        except (ConvergenceError, RealnessError) as exc:
            if errors is None:
                raise
            return exc

    max_workers = workers or default_workers(len(eps_list))
    if max_workers <= 1 or len(eps_list) == 1:
        results = [solve(e) for e in eps_list]
    else:
        logger.info("Solving %d eps points in parallel (max_workers=%d)", len(eps_list), max_workers)
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            futures = [executor.submit(solve, e) for e in eps_list]
            # Collect in input order
            results = [f.result() for f in futures]

    records: list[SweepRecord] = []
    branch_ids: tuple[int, ...] = ()
    next_id = 0
    for eps, result in zip(eps_list, results):
        if isinstance(result, Exception):
            logger.error("[eps=%.6g] point skipped: %s", eps, result)
            errors.append(point_error(eps, result))
            continue
        spectrum, warnings = result
        if not records:
            branch_ids = tuple(range(len(spectrum.pairs)))
            next_id = len(branch_ids)
        else:
            assignment = track_branches(records[-1].spectrum, spectrum)
            ids = []
            for j in assignment.previous_index:
                if j is None:
                    ids.append(next_id)
                    next_id += 1
                else:
                    ids.append(branch_ids[j])
            branch_ids = tuple(ids)
            if assignment.breaks:
                logger.debug("[eps=%.6g] %d branch break(s)", eps, len(assignment.breaks))
        records.append(SweepRecord(
            epsilon=eps, n_max=n_max, spectrum=spectrum,
            branch_ids=branch_ids, warnings=warnings,
        ))

    logger.info("Sweep of %d eps points (n_max=%d) in %.1fs", len(records), n_max, time.time() - t0)
    return records


# ── Exceptional point ─────────────────────────────────────────────────────


def _pair_state(eps: float, branch_pair: tuple[int, int], n_max: int, tol_real: float) -> tuple[bool, str]:
    """(is the pair complex, description) at eps."""
    spectrum = eigendecompose(assemble(eps, n_max), tol_real)
    a, b = spectrum.pairs[branch_pair[0]], spectrum.pairs[branch_pair[1]]
    threshold = EP_INDICATOR_FACTOR * tol_real
    complex_pair = any(abs(p.value.imag) > threshold * max(1.0, abs(p.value)) for p in (a, b))
    desc = f"eps={eps:.8g}: {a.classification.value} {a.value:.8g}, {b.classification.value} {b.value:.8g}"
    return complex_pair, desc


def find_ep(
    branch_pair: tuple[int, int],
    bracket: tuple[float, float],
    n_max: int,
    tol: float,
    tol_real: float = TOL_REAL,
) -> EpResult:
    """Bisect for the eps where branch_pair turns from a conjugate pair (below) to two real levels (above)."""
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError(f"bracket must be ascending, got {bracket}")
    if tol < MIN_EP_TOL:
        raise ValueError(f"tol must be >= {MIN_EP_TOL}, got {tol}")
    a, b = branch_pair
    if not 0 <= a < b < n_max:
        raise ValueError(f"branch pair {branch_pair} invalid for n_max={n_max}")

    t0 = time.time()
    lo_complex, lo_desc = _pair_state(lo, branch_pair, n_max, tol_real)
    hi_complex, hi_desc = _pair_state(hi, branch_pair, n_max, tol_real)
    if lo_complex == hi_complex:
        raise InvalidBracketError(
            f"Indicator identical at both bracket ends ({'complex' if lo_complex else 'real'})",
            lower=lo_desc, upper=hi_desc,
        )
    if not lo_complex:
        raise InvalidBracketError(
            "Bracket reversed: branches real at the lower end and paired at the upper end",
            lower=lo_desc, upper=hi_desc,
        )

    iterations = 0
    while hi - lo > tol:
        if iterations >= MAX_BISECTIONS:
            raise ConvergenceError(f"EP bisection did not reach width {tol} after {MAX_BISECTIONS} steps")
        mid = 0.5 * (lo + hi)
        mid_complex, _ = _pair_state(mid, branch_pair, n_max, tol_real)
        if mid_complex:
            lo = mid
        else:
            hi = mid
        iterations += 1

    eps_ep = 0.5 * (lo + hi)
    logger.info(
        "EP for branches %s at eps=%.8f (n_max=%d, %d bisections) in %.1fs",
        branch_pair, eps_ep, n_max, iterations, time.time() - t0,
    )
    return EpResult(
        eps_ep=eps_ep, bracket=(lo, hi), initial_bracket=(float(bracket[0]), float(bracket[1])),
        branch_pair=(a, b), n_max=n_max, tol=tol, iterations=iterations,
    )


# ── Truncation convergence ────────────────────────────────────────────────


def convergence_check(
    eps: float,
    n_max_list: Sequence[int],
    levels: int = DRIFT_LEVELS,
    threshold: float = DRIFT_THRESHOLD,
) -> DriftTable:
    """|E_k(n_max_i) - E_k(n_max_last)| for the lowest levels; large drifts are flagged, not raised."""
    sizes = [int(n) for n in n_max_list]
    if not sizes or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError(f"n_max_list must be non-empty and ascending, got {n_max_list}")

    spectra = [eigendecompose(assemble(eps, n)) for n in sizes]
    reference = spectra[-1].values[:levels]
    rows = []
    for n, spectrum in zip(sizes, spectra):
        vals = spectrum.values[:levels]
        for k, (value, ref) in enumerate(zip(vals, reference)):
            drift = float(abs(value - ref))
            flagged = drift > threshold
            if flagged:
                logger.warning("[eps=%.6g] level %d drifts %.3e between n_max=%d and %d",
                               eps, k, drift, n, sizes[-1])
            rows.append(DriftRow(level=k, n_max=n, value=complex(value), drift=drift, flagged=flagged))
    return DriftTable(epsilon=float(eps), n_max_list=tuple(sizes), rows=tuple(rows))
