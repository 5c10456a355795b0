"""Quadrature rules and compensated reductions shared by the numerical modules."""

from __future__ import annotations

import logging
import math
import warnings
from collections.abc import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.special import roots_jacobi, roots_legendre

from .errors import ConvergenceError, GridError

logger = logging.getLogger(__name__)

QUAD_LIMIT = 800


def adaptive_quad(
    func: Callable[[float], float],
    a: float,
    b: float,
    *,
    epsabs: float,
    label: str = "",
    breakpoints: Sequence[float] | None = None,
    endpoint_powers: tuple[float, float] | None = None,
) -> float:
    """Adaptive Gauss–Kronrod integral of a real function on [a, b].

    endpoint_powers=(alpha, beta) integrates func(x) (x-a)^alpha (b-x)^beta
    with QUADPACK's algebraic-weight rule, which resolves |x|^eps kinks at an
    endpoint exactly. It cannot be combined with breakpoints.

    QUADPACK warnings (roundoff, subdivision limit, divergence) are promoted
    to ConvergenceError so oracle values are never silently degraded.
    """
    extra: dict = {}
    if endpoint_powers is not None:
        extra = {"weight": "alg", "wvar": endpoint_powers}
    elif breakpoints is not None:
        extra = {"points": breakpoints}
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, abserr = integrate.quad(
                func, a, b,
                epsabs=epsabs, epsrel=0.0, limit=QUAD_LIMIT,
                **extra,
            )
        except integrate.IntegrationWarning as exc:
            raise ConvergenceError(
                f"Adaptive quadrature {label or ''} on [{a}, {b}] did not converge: {exc}"
            ) from exc
    logger.debug("quad %s on [%.3f, %.3f] = %.17g (err %.2e)", label, a, b, value, abserr)
    return value


def simpson_weights(n: int, h: float) -> np.ndarray:
    """Composite Simpson weights for n (odd) equally spaced nodes."""
    if n < 3 or n % 2 == 0:
        raise GridError(f"Simpson rule needs an odd node count >= 3, got {n}")
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)


def compensated_sum(values: np.ndarray) -> float:
    """Exactly rounded sum, independent of reduction order."""
    return math.fsum(np.asarray(values, dtype=float).ravel())


def integrate_2d(values: np.ndarray, wx: np.ndarray, wp: np.ndarray) -> float:
    """Tensor-product quadrature of values[i, j] with weights wx[i] * wp[j]."""
    if values.shape != (wx.size, wp.size):
        raise GridError(f"values shape {values.shape} does not match weights ({wx.size}, {wp.size})")
    return compensated_sum(np.outer(wx, wp) * values)


def gauss_jacobi_halfline(n: int, R: float, power: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for ∫_0^R f(x) x^power dx, exact for polynomial f of degree < 2n."""
    t, w = roots_jacobi(n, 0.0, power)
    x = 0.5 * R * (1.0 + t)
    return x, w * (0.5 * R) ** (1.0 + power)


def gauss_legendre(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    t, w = roots_legendre(n)
    half = 0.5 * (b - a)
    return a + half * (1.0 + t), w * half


def composite_gauss_legendre(
    breakpoints: Sequence[float],
    *,
    max_panel: float,
    order: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Gauss–Legendre nodes on consecutive intervals between sorted breakpoints.

    Every interval is cut into panels no longer than max_panel; zero-length
    intervals are skipped, so coincident breakpoints are allowed.
    """
    t, w = roots_legendre(order)
    nodes: list[np.ndarray] = []
    weights: list[np.ndarray] = []
    for lo, hi in zip(breakpoints[:-1], breakpoints[1:]):
        length = hi - lo
        if length <= 0.0:
            continue
        n_panels = max(1, math.ceil(length / max_panel))
        edges = np.linspace(lo, hi, n_panels + 1)
        for a, b in zip(edges[:-1], edges[1:]):
            half = 0.5 * (b - a)
            nodes.append(a + half * (1.0 + t))
            weights.append(w * half)
    return np.concatenate(nodes), np.concatenate(weights)
