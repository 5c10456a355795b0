"""The -(ix)^eps potential and its truncated Fock-basis Hamiltonian.

H(eps) = -1/2 d²/dx² + 1/2 V_eps(x) with ħ = m = 1, where

    V_eps(x) = -|x|^eps [cos(eps π/2) + i sin(eps π/2)]   x > 0
             = 0                                          x = 0
             = -|x|^eps [cos(eps π/2) - i sin(eps π/2)]   x < 0

so eps = 2 is the ordinary oscillator with E_n = n + 1/2.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import cosdg, sindg

from .errors import SpecialFunctionDomainError
from .integrate import adaptive_quad
from .specfun import MAX_FOCK_INDEX, normalized_halfline, oscillator_pair_product

logger = logging.getLogger(__name__)

N_MAX_RANGE = (8, 100)
DEFAULT_N_MAX = 71
QUAD_ABS_TOL = 1e-12


@dataclass(frozen=True)
class PotentialSpec:
    """V_eps on the branch fixed above; callable on scalars and arrays."""

    epsilon: float

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise SpecialFunctionDomainError(f"eps must be > 0, got {self.epsilon}")

    @property
    def cos_factor(self) -> float:
        # cosdg/sindg keep cos(π) = -1 and sin(π) = 0 exact for integer eps.
        return float(cosdg(90.0 * self.epsilon))

    @property
    def sin_factor(self) -> float:
        return float(sindg(90.0 * self.epsilon))

    @property
    def is_even_integer(self) -> bool:
        return float(self.epsilon).is_integer() and int(self.epsilon) % 2 == 0

    def __call__(self, x: float | np.ndarray) -> complex | np.ndarray:
        return potential_eval(self, x)

    def imag(self, x: float | np.ndarray) -> float | np.ndarray:
        """Im V_eps(x) = -sgn(x) |x|^eps sin(eps π/2)."""
        xa = np.asarray(x, dtype=float)
        value = -np.sign(xa) * np.abs(xa) ** self.epsilon * self.sin_factor
        return float(value) if value.ndim == 0 else value


def potential_eval(spec: PotentialSpec, x: float | np.ndarray) -> complex | np.ndarray:
    xa = np.asarray(x, dtype=float)
    magnitude = np.abs(xa) ** spec.epsilon
    value = -magnitude * spec.cos_factor - 1j * np.sign(xa) * magnitude * spec.sin_factor
    return complex(value) if value.ndim == 0 else value


# ── Matrix elements ───────────────────────────────────────────────────────


def kinetic_element(n: int, m: int) -> float:
    """⟨m| -1/2 d²/dx² |n⟩ in the oscillator basis."""
    if n < 0 or m < 0:
        raise SpecialFunctionDomainError(f"Fock indices must be >= 0, got ({n}, {m})")
    if m == n:
        return (2 * n + 1) / 4.0
    if m == n - 2:
        return -math.sqrt(n * (n - 1)) / 4.0
    if m == n + 2:
        return -math.sqrt((n + 1) * (n + 2)) / 4.0
    return 0.0


def potential_element_closed(n: int, m: int, eps: float) -> complex:
    """⟨m| V_eps/2 |n⟩ from the half-line closed forms.

    Reflecting the x < 0 half onto x > 0 gives (-1)^(n+m) times the same
    integral, so same-parity pairs keep only the real part -cos(eps π/2) and
    opposite-parity pairs only the imaginary part -i sin(eps π/2).
    """
    spec = PotentialSpec(eps)
    if (n + m) % 2 == 0:
        c = spec.cos_factor
        if c == 0.0:
            return 0j
        return complex(-c * normalized_halfline(n, m, eps), 0.0)
    s = spec.sin_factor
    if s == 0.0:
        return 0j
    return complex(0.0, -s * normalized_halfline(n, m, eps))


def potential_element_quad(n: int, m: int, eps: float) -> complex:
    """Quadrature oracle for potential_element_closed on [-X, X], X = 12 + √(n+m).

    Each half-line is integrated with the |x|^eps factor as an algebraic
    endpoint weight at the origin.
    """
    spec = PotentialSpec(eps)
    if max(n, m) > MAX_FOCK_INDEX:
        raise SpecialFunctionDomainError(f"Fock indices must be <= {MAX_FOCK_INDEX}, got ({n}, {m})")
    cutoff = 12.0 + math.sqrt(n + m)

    def product(x: float) -> float:
        return oscillator_pair_product(n, m, x)

    right = adaptive_quad(
        product, 0.0, cutoff, epsabs=QUAD_ABS_TOL, label=f"V({n},{m},{eps})+",
        endpoint_powers=(eps, 0.0),
    )
    left = adaptive_quad(
        product, -cutoff, 0.0, epsabs=QUAD_ABS_TOL, label=f"V({n},{m},{eps})-",
        endpoint_powers=(0.0, eps),
    )
    real = -0.5 * spec.cos_factor * (right + left)
    imag = -0.5 * spec.sin_factor * (right - left)
    return complex(real, imag)


# ── Assembly ──────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class HamiltonianMatrix:
    """Dense truncated ⟨m|H|n⟩, indices 0..n_max-1; read-only after construction."""

    epsilon: float
    n_max: int
    entries: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        entries = np.array(self.entries, dtype=complex)
        if entries.shape != (self.n_max, self.n_max):
            raise ValueError(f"entries shape {entries.shape} does not match n_max={self.n_max}")
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_entries(cls, entries: np.ndarray, epsilon: float = float("nan")) -> HamiltonianMatrix:
        arr = np.asarray(entries, dtype=complex)
        return cls(epsilon=epsilon, n_max=arr.shape[0], entries=arr)

    @property
    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.entries, "fro"))

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.entries))


def assemble(eps: float, n_max: int) -> HamiltonianMatrix:
    """Assemble H(eps) on the first n_max Fock states.

    Only n <= m is computed; the lower triangle is its mirror, so the result is
    exactly symmetric.
    """
    lo, hi = N_MAX_RANGE
    if not lo <= n_max <= hi:
        raise ValueError(f"n_max must lie in [{lo}, {hi}], got {n_max}")
    PotentialSpec(eps)

    t0 = time.time()
    entries = np.zeros((n_max, n_max), dtype=complex)
    for n in range(n_max):
        for m in range(n, n_max):
            value = kinetic_element(n, m) + potential_element_closed(n, m, eps)
            entries[n, m] = value
            entries[m, n] = value
    elapsed = time.time() - t0
    logger.info("Assembled H(eps=%.5f, n_max=%d) in %.2fs", eps, n_max, elapsed)
    return HamiltonianMatrix(epsilon=float(eps), n_max=n_max, entries=entries)
