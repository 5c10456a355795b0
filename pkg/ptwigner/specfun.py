"""Special-function kernel: Hermite functions, Gamma family, Lauricella F_A, Erdélyi integrals.

The terminating double series behind the half-line integrals alternate in sign
and cancel by tens of decimal digits once the Fock indices reach ~70, so they
are summed in mpmath at a working precision derived from the float log-Gamma
magnitude of their largest term. Everything factorial-laden is combined as
log-magnitude + sign before it is exponentiated.
"""

from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np
from scipy.special import eval_hermite, factorial2, gammaln, poch

from .errors import SpecialFunctionDomainError
from .integrate import adaptive_quad

logger = logging.getLogger(__name__)

MAX_FOCK_INDEX = 100
HERMITE_SAFE_X = 20.0
MAX_LAURICELLA_ORDER = 60
GUARD_DIGITS = 30
# Upper eps used to size the precision of cached eps-independent series.
EPS_PRECISION_REFERENCE = 8.0
QUAD_ABS_TOL = 1e-13

_RESCALE_AT = 1e100

# mpmath keeps its precision in a process-wide context; serialize every
# section that changes it.
_MP_LOCK = threading.RLock()


def _check_fock(n: int, name: str = "n") -> None:
    if n < 0 or n > MAX_FOCK_INDEX:
        raise SpecialFunctionDomainError(f"{name}={n} outside [0, {MAX_FOCK_INDEX}]")


# ── Hermite polynomials and oscillator eigenfunctions ─────────────────────


def hermite_poly(n: int, x: float | np.ndarray) -> float | np.ndarray:
    """Physicists' Hermite polynomial H_n(x).

    Evaluated by scipy's three-term recurrence. Arguments outside the safe range
    n <= 100, |x| <= 20 are rejected instead of being allowed to saturate.
    """
    _check_fock(n)
    xa = np.asarray(x, dtype=float)
    if xa.size and float(np.max(np.abs(xa))) > HERMITE_SAFE_X:
        raise SpecialFunctionDomainError(
            f"|x| = {float(np.max(np.abs(xa))):.3g} exceeds the safe Hermite range {HERMITE_SAFE_X}"
        )
    value = eval_hermite(n, xa)
    if not np.all(np.isfinite(value)):
        raise SpecialFunctionDomainError(f"H_{n}(x) overflowed")
    return float(value) if np.ndim(value) == 0 else value


def oscillator_basis(count: int, x: float | np.ndarray) -> np.ndarray:
    """Normalized oscillator eigenfunctions u_0..u_{count-1} at x, shape (count, *x.shape).

    Runs the orthonormal recurrence
        u_{k+1} = sqrt(2/(k+1)) x u_k - sqrt(k/(k+1)) u_{k-1}
    on e^{x²/2}-scaled values and carries a per-point log scale, so neither the
    polynomial growth nor the Gaussian decay overflows before the final product.
    """
    if count < 1 or count > MAX_FOCK_INDEX + 1:
        raise SpecialFunctionDomainError(f"basis size {count} outside [1, {MAX_FOCK_INDEX + 1}]")
    xa = np.asarray(x, dtype=float)
    out = np.empty((count,) + xa.shape)
    log_scale = -0.5 * xa * xa - 0.25 * math.log(math.pi)
    prev = np.zeros_like(xa)
    cur = np.ones_like(xa)
    out[0] = np.exp(log_scale)
    for k in range(count - 1):
        nxt = math.sqrt(2.0 / (k + 1)) * xa * cur - math.sqrt(k / (k + 1.0)) * prev
        prev, cur = cur, nxt
        big = np.maximum(np.abs(prev), np.abs(cur))
        if np.any(big > _RESCALE_AT):
            factor = np.where(big > _RESCALE_AT, big, 1.0)
            prev = prev / factor
            cur = cur / factor
            log_scale = log_scale + np.log(factor)
        with np.errstate(under="ignore"):
            out[k + 1] = cur * np.exp(log_scale)
    return out


def oscillator_pair_product(mu: int, nu: int, x: float) -> float:
    """u_μ(x) u_ν(x) for a scalar x; the same recurrence in plain floats, for quadrature integrands."""
    top = max(mu, nu)
    log_scale = -0.5 * x * x - 0.25 * math.log(math.pi)
    prev, cur = 0.0, 1.0
    values = {0: 1.0}
    log_scales = {0: log_scale}
    for k in range(top):
        prev, cur = cur, math.sqrt(2.0 / (k + 1)) * x * cur - math.sqrt(k / (k + 1.0)) * prev
        big = max(abs(prev), abs(cur))
        if big > _RESCALE_AT:
            prev, cur = prev / big, cur / big
            log_scale += math.log(big)
        values[k + 1] = cur
        log_scales[k + 1] = log_scale
    log_total = log_scales[mu] + log_scales[nu]
    product = values[mu] * values[nu]
    if product == 0.0:
        return 0.0
    return math.copysign(math.exp(math.log(abs(product)) + log_total), product)


def oscillator_eigenfunction(n: int, x: float | np.ndarray) -> float | np.ndarray:
    """u_n(x) = (2^n n! √π)^{-1/2} H_n(x) e^{-x²/2}."""
    _check_fock(n)
    value = oscillator_basis(n + 1, x)[n]
    return float(value) if np.ndim(value) == 0 else value


# ── Gamma family ──────────────────────────────────────────────────────────


def log_gamma(z: float) -> float:
    if z <= 0:
        if float(z).is_integer():
            raise SpecialFunctionDomainError(f"Gamma has a pole at z={z}")
        raise SpecialFunctionDomainError(f"log_gamma requires z > 0, got {z}")
    return float(gammaln(z))


def pochhammer(a: float, k: int) -> float:
    """Rising factorial (a)_k; exactly 1 for k = 0."""
    if k < 0:
        raise SpecialFunctionDomainError(f"Pochhammer order must be >= 0, got {k}")
    if k == 0:
        return 1.0
    return float(poch(a, k))


def double_factorial(k: int) -> float:
    if k < -1:
        raise SpecialFunctionDomainError(f"double factorial needs k >= -1, got {k}")
    if k <= 0:
        return 1.0
    return float(factorial2(k, exact=True))


def _double_factorial_int(k: int) -> int:
    return 1 if k <= 0 else int(factorial2(k, exact=True))


# ── Lauricella F_A, two variables, terminating, unit arguments ────────────


@dataclass(frozen=True)
class LauricellaArgs:
    """Parameters of F_A(a; -r, -s; c1, c2; 1, 1)."""

    a: float
    r: int
    s: int
    c1: float
    c2: float

    def __post_init__(self) -> None:
        if self.r < 0 or self.s < 0:
            raise SpecialFunctionDomainError(f"terminating orders must be >= 0, got r={self.r}, s={self.s}")
        if self.r > MAX_LAURICELLA_ORDER or self.s > MAX_LAURICELLA_ORDER:
            raise SpecialFunctionDomainError(
                f"terminating orders above {MAX_LAURICELLA_ORDER} are not supported (r={self.r}, s={self.s})"
            )
        if self.c1 <= 0 or self.c2 <= 0:
            raise SpecialFunctionDomainError(f"lower parameters must be positive, got {self.c1}, {self.c2}")
        if self.a <= 0:
            raise SpecialFunctionDomainError(f"upper parameter a must be positive, got {self.a}")


def _log_binomial(n: int) -> np.ndarray:
    i = np.arange(n + 1)
    return gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1)


def _max_log10_term(args: LauricellaArgs) -> float:
    """log10 of the largest |term| of the double sum, from float log-Gamma magnitudes."""
    i = np.arange(args.r + 1)[:, None]
    j = np.arange(args.s + 1)[None, :]
    log_mag = (
        gammaln(args.a + i + j) - gammaln(args.a)
        + _log_binomial(args.r)[:, None] + _log_binomial(args.s)[None, :]
        - (gammaln(args.c1 + i) - gammaln(args.c1))
        - (gammaln(args.c2 + j) - gammaln(args.c2))
    )
    return float(np.max(log_mag)) / math.log(10.0)


def _precision_for(log10_magnitude: float) -> int:
    """Working decimal digits: guard digits above the largest term, rounded up to a multiple of 10."""
    dps = GUARD_DIGITS + 17 + max(0, math.ceil(log10_magnitude))
    return 10 * math.ceil(dps / 10)


def _lauricella_terms_mp(args: LauricellaArgs) -> mpmath.mpf:
    """Double sum at the current mpmath precision, terms built by exact ratios.

    The sign of every term is (-1)^(i1+i2) (a, c1, c2 > 0), carried by the
    (-r)_i and (-s)_j factors.
    """
    a = mpmath.mpf(args.a)
    c1 = mpmath.mpf(args.c1)
    c2 = mpmath.mpf(args.c2)
    total = mpmath.mpf(0)
    row = mpmath.mpf(1)  # term (i1, 0)
    for i1 in range(args.r + 1):
        term = row
        for i2 in range(args.s + 1):
            total += term
            if i2 < args.s:
                term = term * (a + i1 + i2) * (i2 - args.s) / ((c2 + i2) * (i2 + 1))
        if i1 < args.r:
            row = row * (a + i1) * (i1 - args.r) / ((c1 + i1) * (i1 + 1))
    return total


def lauricella_fa2(args: LauricellaArgs) -> float:
    """Terminating F_A(a; -r, -s; c1, c2; 1, 1) as a float."""
    dps = _precision_for(_max_log10_term(args))
    with _MP_LOCK, mpmath.workdps(dps):
        return float(_lauricella_terms_mp(args))


def lauricella_fa2_exact(args: LauricellaArgs) -> Fraction:
    """Exact rational F_A for integer-valued 2a; c1, c2 must be dyadic (e.g. 1/2, 3/2).

    The half-integer lower Pochhammer symbols are reduced through double
    factorials: (1/2)_i = (2i-1)!!/2^i and (3/2)_i = (2i+1)!!/2^i.
    """
    if not float(2 * args.a).is_integer():
        raise SpecialFunctionDomainError(f"exact path needs integer 2a, got a={args.a}")
    a = Fraction(round(2 * args.a), 2)

    def lower(c: float, i: int) -> Fraction:
        if c == 0.5:
            return Fraction(_double_factorial_int(2 * i - 1), 2 ** i)
        if c == 1.5:
            return Fraction(_double_factorial_int(2 * i + 1), 2 ** i)
        cf = Fraction(c)
        return math.prod((cf + t for t in range(i)), start=Fraction(1))

    def rising(x: Fraction, k: int) -> Fraction:
        return math.prod((x + t for t in range(k)), start=Fraction(1))

    total = Fraction(0)
    for i1 in range(args.r + 1):
        for i2 in range(args.s + 1):
            num = rising(a, i1 + i2) * rising(Fraction(-args.r), i1) * rising(Fraction(-args.s), i2)
            den = lower(args.c1, i1) * lower(args.c2, i2) * math.factorial(i1) * math.factorial(i2)
            total += num / den
    return total


# ── Erdélyi half-line integrals ∫_0^∞ e^{-x²} H_μ H_ν x^ε dx ───────────────


@dataclass(frozen=True)
class ParityCase:
    """Parity-resolved closed form for a (μ, ν) pair.

    ∫_0^∞ e^{-x²} H_μ H_ν x^ε dx = sign · e^{log_prefactor} · Γ(a) F_A(a; -r, -s; c1, c2)
    with a = (ε + offset) / 2.
    """

    r: int
    s: int
    c1: float
    c2: float
    offset: int
    sign: int
    log_prefactor: float

    def upper(self, eps: float) -> float:
        return 0.5 * (eps + self.offset)


def parity_case(mu: int, nu: int, normalized: bool = False) -> ParityCase:
    """Closed-form parameters for the three parity classes (even-even, even-odd, odd-odd).

    normalized=True folds in the oscillator normalizations (2^μ μ! √π)^{-1/2}
    (2^ν ν! √π)^{-1/2}, giving ∫_0^∞ u_μ u_ν x^ε dx instead.
    """
    _check_fock(mu, "mu")
    _check_fock(nu, "nu")
    if mu % 2 == 1 and nu % 2 == 0:
        mu, nu = nu, mu
    log_fact = gammaln(mu + 1) + gammaln(nu + 1)
    if mu % 2 == 0 and nu % 2 == 0:
        r, s, c1, c2, offset, factor = mu // 2, nu // 2, 0.5, 0.5, 1, 0.5
    elif mu % 2 == 0:
        r, s, c1, c2, offset, factor = mu // 2, (nu - 1) // 2, 0.5, 1.5, 2, 1.0
    else:
        r, s, c1, c2, offset, factor = (mu - 1) // 2, (nu - 1) // 2, 1.5, 1.5, 3, 2.0
    log_pref = log_fact - gammaln(r + 1) - gammaln(s + 1) + math.log(factor)
    if normalized:
        log_pref -= 0.5 * ((mu + nu) * math.log(2.0) + log_fact + math.log(math.pi))
    return ParityCase(
        r=r, s=s, c1=c1, c2=c2, offset=offset,
        sign=-1 if (r + s) % 2 else 1,
        log_prefactor=float(log_pref),
    )


def _check_eps(eps: float) -> None:
    if not eps > 0:
        raise SpecialFunctionDomainError(f"eps must be > 0, got {eps}")


def erdelyi_halfline(mu: int, nu: int, eps: float) -> float:
    """∫_0^∞ e^{-x²} H_μ(x) H_ν(x) x^ε dx from the parity-resolved closed forms."""
    _check_eps(eps)
    case = parity_case(mu, nu)
    args = LauricellaArgs(a=case.upper(eps), r=case.r, s=case.s, c1=case.c1, c2=case.c2)
    log10_gamma = float(gammaln(args.a)) / math.log(10.0)
    dps = _precision_for(_max_log10_term(args) + max(0.0, log10_gamma))
    with _MP_LOCK, mpmath.workdps(dps):
        value = (
            case.sign
            * mpmath.exp(case.log_prefactor)
            * mpmath.gamma(args.a)
            * _lauricella_terms_mp(args)
        )
        return float(value)


def erdelyi_halfline_quad(mu: int, nu: int, eps: float) -> float:
    """Quadrature oracle for erdelyi_halfline on [0, 12 + √(μ+ν)].

    The integrand is integrated in normalized form (u_μ u_ν x^ε) so the
    absolute tolerance is meaningful for every index, then rescaled.
    """
    _check_eps(eps)
    _check_fock(mu, "mu")
    _check_fock(nu, "nu")
    def integrand(x: float) -> float:
        return oscillator_pair_product(mu, nu, x)

    upper = 12.0 + math.sqrt(mu + nu)
    value = adaptive_quad(
        integrand, 0.0, upper,
        epsabs=QUAD_ABS_TOL, label=f"erdelyi({mu},{nu},{eps})",
        endpoint_powers=(eps, 0.0),
    )
    log_norm = 0.5 * ((mu + nu) * math.log(2.0) + gammaln(mu + 1) + gammaln(nu + 1) + math.log(math.pi))
    return value * math.exp(log_norm)


# ── ε-independent regrouping used for fast matrix assembly ────────────────


@dataclass(frozen=True)
class HalflineSeries:
    """∫_0^∞ (weight) x^ε dx = Σ_k Γ(a + k) coefficients[k], a = (ε + offset) / 2.

    The F_A double sum regrouped by total degree k = i1 + i2; the coefficients
    (prefactor included) do not depend on ε and are kept at `dps` digits.
    """

    offset: int
    coefficients: tuple
    dps: int


def series_precision(mu: int, nu: int, eps: float) -> int:
    case = parity_case(mu, nu)
    args = LauricellaArgs(a=case.upper(eps), r=case.r, s=case.s, c1=case.c1, c2=case.c2)
    log10_gamma = float(gammaln(args.a)) / math.log(10.0)
    return _precision_for(_max_log10_term(args) + max(0.0, log10_gamma))


@lru_cache(maxsize=None)
def halfline_series(mu: int, nu: int, normalized: bool, dps: int) -> HalflineSeries:
    case = parity_case(mu, nu, normalized=normalized)
    with _MP_LOCK, mpmath.workdps(dps):
        c1 = mpmath.mpf(case.c1)
        c2 = mpmath.mpf(case.c2)
        first = [mpmath.mpf(1)]
        for i in range(case.r):
            first.append(first[-1] * (i - case.r) / ((c1 + i) * (i + 1)))
        second = [mpmath.mpf(1)]
        for j in range(case.s):
            second.append(second[-1] * (j - case.s) / ((c2 + j) * (j + 1)))
        prefactor = case.sign * mpmath.exp(case.log_prefactor)
        coefficients = []
        for k in range(case.r + case.s + 1):
            lo, hi = max(0, k - case.s), min(k, case.r)
            conv = mpmath.fsum(first[i] * second[k - i] for i in range(lo, hi + 1))
            coefficients.append(prefactor * conv)
    return HalflineSeries(offset=case.offset, coefficients=tuple(coefficients), dps=dps)


@lru_cache(maxsize=4096)
def _gamma_ladder(a: float, count: int, dps: int) -> tuple:
    with _MP_LOCK, mpmath.workdps(dps):
        values = [mpmath.gamma(mpmath.mpf(a))]
        for k in range(1, count):
            values.append(values[-1] * (a + k - 1))
    return tuple(values)


def sum_halfline_series(series: HalflineSeries, eps: float) -> float:
    """Evaluate a cached HalflineSeries at ε."""
    _check_eps(eps)
    a = 0.5 * (eps + series.offset)
    ladder = _gamma_ladder(a, len(series.coefficients), series.dps)
    with _MP_LOCK, mpmath.workdps(series.dps):
        return float(mpmath.fdot(series.coefficients, ladder))


def normalized_halfline(mu: int, nu: int, eps: float) -> float:
    """∫_0^∞ u_μ(x) u_ν(x) x^ε dx via the cached regrouped series."""
    dps = max(series_precision(mu, nu, eps), series_precision(mu, nu, EPS_PRECISION_REFERENCE))
    return sum_halfline_series(halfline_series(min(mu, nu), max(mu, nu), True, dps), eps)
