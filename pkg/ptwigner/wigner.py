"""Wigner distributions of truncated-basis states on phase-space grids.

The production path is the closed Laguerre form of the Fock cross-Wigner
functions; direct trapezoid quadrature of the defining ξ-integral serves as
the oracle.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import eval_genlaguerre, gammaln

from .errors import ConvergenceError, GridError, RealnessError
from .integrate import integrate_2d, simpson_weights
from .specfun import MAX_FOCK_INDEX, oscillator_basis

logger = logging.getLogger(__name__)

MIN_NODES = 33
IMAG_RESIDUE_TOL = 1e-12
NORM_TOL = 1e-8
QUAD_TOL = 1e-10
QUAD_INITIAL_STEP = 0.2
QUAD_MAX_REFINEMENTS = 8
QUAD_MARGIN = 14.0
TIME_CONVENTION = "t=0"


@dataclass(frozen=True)
class PhaseGrid:
    """Tensor grid with inclusive endpoints; node counts odd so symmetric grids contain (0, 0)."""

    x_min: float
    x_max: float
    p_min: float
    p_max: float
    n_x: int
    n_p: int

    def __post_init__(self) -> None:
        if not self.x_max > self.x_min or not self.p_max > self.p_min:
            raise GridError(f"empty grid bounds x[{self.x_min}, {self.x_max}] p[{self.p_min}, {self.p_max}]")
        for name, n in (("n_x", self.n_x), ("n_p", self.n_p)):
            if n < MIN_NODES or n % 2 == 0:
                raise GridError(f"{name}={n}: node counts must be odd and >= {MIN_NODES}")

    @classmethod
    def square(cls, half_width: float, nodes: int) -> PhaseGrid:
        return cls(-half_width, half_width, -half_width, half_width, nodes, nodes)

    @classmethod
    def default(cls) -> PhaseGrid:
        return cls.square(5.0, 201)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_x)

    @property
    def p(self) -> np.ndarray:
        return np.linspace(self.p_min, self.p_max, self.n_p)

    @property
    def hx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_x - 1)

    @property
    def hp(self) -> float:
        return (self.p_max - self.p_min) / (self.n_p - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_x, self.n_p)

    @property
    def is_symmetric(self) -> bool:
        return self.x_min == -self.x_max and self.p_min == -self.p_max

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.p, indexing="ij")

    def refined(self) -> PhaseGrid:
        """Same bounds, half the spacing."""
        return PhaseGrid(self.x_min, self.x_max, self.p_min, self.p_max, 2 * self.n_x - 1, 2 * self.n_p - 1)


@dataclass(frozen=True)
class WignerField:
    """W(x_i, p_j) at t = 0; energy is the source eigenvalue (Im E drives ∂W/∂t = 2 Im E W)."""

    grid: PhaseGrid
    values: np.ndarray = field(repr=False)
    energy: complex = 0j
    state_index: int | None = None
    imag_residue: float = 0.0
    time_convention: str = TIME_CONVENTION

    def integral(self) -> float:
        g = self.grid
        return integrate_2d(self.values, simpson_weights(g.n_x, g.hx), simpson_weights(g.n_p, g.hp))

    def boundary_max(self) -> float:
        v = self.values
        return float(max(np.abs(v[0]).max(), np.abs(v[-1]).max(), np.abs(v[:, 0]).max(), np.abs(v[:, -1]).max()))


@dataclass(frozen=True)
class SymmetryReport:
    x_defect: float
    p_defect: float
    mirror_defect: float | None = None


def check_coeffs(coeffs: np.ndarray) -> np.ndarray:
    c = np.asarray(coeffs, dtype=complex).ravel()
    if c.size == 0 or c.size > MAX_FOCK_INDEX + 1:
        raise ValueError(f"coefficient vector length {c.size} outside [1, {MAX_FOCK_INDEX + 1}]")
    norm = float(np.linalg.norm(c))
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"coefficients must be normalized, got norm {norm:.12g}")
    return c


def wavefunction(coeffs: np.ndarray, y: float | np.ndarray) -> np.ndarray:
    """ψ(y) = Σ_k c_k u_k(y)."""
    c = np.asarray(coeffs, dtype=complex).ravel()
    basis = oscillator_basis(c.size, y)
    return np.tensordot(c, basis, axes=(0, 0))


def marginal_x(coeffs: np.ndarray, x: float | np.ndarray) -> np.ndarray:
    """|ψ(x)|², the p-integral of W."""
    return np.abs(wavefunction(check_coeffs(coeffs), x)) ** 2


# ── Closed-form cross-Wigner functions ────────────────────────────────────


def cross_wigner_fock(k: int, l: int, x: float | np.ndarray, p: float | np.ndarray) -> complex | np.ndarray:
    """(1/2π) ∫ u_k(x+ξ/2) u_l(x−ξ/2) e^{iξp} dξ.

    For l >= k this is ((-1)^k/π) √(k!/l!) (√2 (x − ip))^(l−k) e^{−r²} L_k^(l−k)(2r²);
    the other order is the complex conjugate.
    """
    if min(k, l) < 0 or max(k, l) > MAX_FOCK_INDEX:
        raise ValueError(f"Fock indices ({k}, {l}) outside [0, {MAX_FOCK_INDEX}]")
    if k > l:
        return np.conj(cross_wigner_fock(l, k, x, p))
    xa = np.asarray(x, dtype=float)
    pa = np.asarray(p, dtype=float)
    r2 = xa * xa + pa * pa
    d = l - k
    beta = math.sqrt(2.0) * (xa - 1j * pa)
    scale = math.exp(0.5 * (gammaln(k + 1) - gammaln(l + 1)))
    value = ((-1) ** k / math.pi) * scale * beta ** d * np.exp(-r2) * eval_genlaguerre(k, d, 2.0 * r2)
    return complex(value) if np.ndim(value) == 0 else value


def wigner_values(coeffs: np.ndarray, x: np.ndarray, p: np.ndarray) -> tuple[np.ndarray, float]:
    """W at broadcast node arrays, plus the imaginary residue of the complex sum.

    For each offset d = l − k the Laguerre functions are generated by the
    normalized three-term recurrence
        √((k+1)(k+1+d)) ℓ_{k+1} = (2k+1+d−z) ℓ_k − √(k(k+d)) ℓ_{k−1},  z = 2r²,
    with ℓ_k = √(k! d!/(k+d)!) L_k^(d)(z), and summed against
    (−1)^k conj(c_k) c_{k+d}.
    """
    c = check_coeffs(coeffs)
    xa, pa = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(p, dtype=float))
    r2 = xa * xa + pa * pa
    z = 2.0 * r2
    theta = np.arctan2(pa, xa)
    with np.errstate(divide="ignore"):
        log_beta = 0.5 * np.log(2.0 * r2)
    n = c.size

    total = np.zeros(xa.shape, dtype=complex)
    for d in range(n):
        b = np.array([(-1) ** k * np.conj(c[k]) * c[k + d] for k in range(n - d)])
        if not np.any(b):
            continue
        prev = np.zeros_like(z)
        cur = np.ones_like(z)
        acc = b[0] * cur
        for k in range(n - d - 1):
            nxt = ((2 * k + 1 + d - z) * cur - math.sqrt(k * (k + d)) * prev) / math.sqrt((k + 1) * (k + 1 + d))
            prev, cur = cur, nxt
            acc = acc + b[k + 1] * cur
        if d == 0:
            total += np.exp(-r2) * acc
            continue
        with np.errstate(under="ignore"):
            magnitude = np.exp(d * log_beta - 0.5 * gammaln(d + 1) - r2)
        term = magnitude * np.exp(-1j * d * theta) * acc
        total += term + np.conj(term)
    total /= math.pi

    if not np.all(np.isfinite(total)):
        raise RealnessError("non-finite Wigner values; check the coefficient vector")
    residue = float(np.max(np.abs(total.imag))) if total.size else 0.0
    if residue > IMAG_RESIDUE_TOL:
        raise RealnessError(f"Wigner imaginary residue {residue:.3e} exceeds {IMAG_RESIDUE_TOL}")
    return total.real, residue


def wigner_from_coeffs(
    coeffs: np.ndarray,
    grid: PhaseGrid,
    *,
    energy: complex = 0j,
    state_index: int | None = None,
) -> WignerField:
    t0 = time.time()
    xx, pp = grid.mesh()
    values, residue = wigner_values(coeffs, xx, pp)
    values.flags.writeable = False
    logger.debug("Wigner field %dx%d (%d coefficients) in %.2fs",
                 grid.n_x, grid.n_p, np.size(coeffs), time.time() - t0)
    return WignerField(
        grid=grid, values=values, energy=complex(energy),
        state_index=state_index, imag_residue=residue,
    )


def wigner_quad(coeffs: np.ndarray, x: float, p: float) -> float:
    """Trapezoid quadrature of (1/2π) ∫ ψ*(x+ξ/2) ψ(x−ξ/2) e^{iξp} dξ over |ξ| <= 2(|x|+14).

    The step starts at 0.2 and is halved until successive values agree to 1e−10.
    """
    c = check_coeffs(coeffs)
    cutoff = 2.0 * (abs(x) + QUAD_MARGIN)

    def estimate(step: float) -> float:
        n = 2 * math.ceil(cutoff / step) + 1
        xi = np.linspace(-cutoff, cutoff, n)
        left = wavefunction(c, x + 0.5 * xi)
        right = wavefunction(c, x - 0.5 * xi)
        integrand = np.conj(left) * right * np.exp(1j * xi * p)
        return float(integrate.trapezoid(integrand, xi).real) / (2.0 * math.pi)

    step = QUAD_INITIAL_STEP
    last = estimate(step)
    diff = float("inf")
    for attempt in range(QUAD_MAX_REFINEMENTS):
        step *= 0.5
        value = estimate(step)
        diff = abs(value - last)
        if diff < QUAD_TOL:
            return value
        last = value
    raise ConvergenceError(
        f"Wigner quadrature at ({x}, {p}) not converged after {QUAD_MAX_REFINEMENTS} refinements (last change {diff:.3e})"
    )


def symmetry_diagnostics(w_a: WignerField, w_b: WignerField | None = None) -> SymmetryReport:
    """Reflection defects of W_a under x → −x and p → −p, and the mirror defect W_b(x,p) vs W_a(−x,p)."""
    grid = w_a.grid
    if not grid.is_symmetric:
        raise GridError("symmetry diagnostics need a grid symmetric about the origin")
    a = w_a.values
    x_defect = float(np.max(np.abs(a - a[::-1, :])))
    p_defect = float(np.max(np.abs(a - a[:, ::-1])))
    mirror = None
    if w_b is not None:
        if w_b.grid != grid:
            raise GridError(f"grid mismatch: {w_b.grid} vs {grid}")
        mirror = float(np.max(np.abs(w_b.values - a[::-1, :])))
    return SymmetryReport(x_defect=x_defect, p_defect=p_defect, mirror_defect=mirror)
