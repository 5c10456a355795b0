"""Structural checks on computed spectra before they are tracked and serialized."""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .hamiltonian import HamiltonianMatrix
    from .spectrum import Spectrum

logger = logging.getLogger(__name__)

TRACE_REL_TOL = 1e-8
CONJUGATE_CLOSURE_LEVELS = 10
CONJUGATE_CLOSURE_TOL = 1e-8


def conjugation_defect(values: np.ndarray) -> float:
    """max over values of the distance to the nearest conjugate within the same set."""
    if values.size == 0:
        return 0.0
    dist = np.abs(values[:, None] - np.conj(values)[None, :])
    return float(np.max(np.min(dist, axis=1)))


def check_spectrum(
    spectrum: Spectrum,
    label: str,
    matrix: HamiltonianMatrix | None = None,
) -> tuple[bool, list[str]]:
    """Validate one classified spectrum.

    Args:
        spectrum: Output of spectrum.eigendecompose.
        label: Label like "eps=1.42" for logging.
        matrix: The matrix that was diagonalized, enabling the trace identity check.

    Returns:
        (is_valid, list_of_warnings). is_valid is False only if the spectrum is
        structurally broken (wrong size or a PairMember whose partner does not
        point back). Unclassified levels, trace deviations and conjugation
        defects are warnings: truncation artifacts are valid output.
    """
    # Local import; spectrum imports this module.
    from .spectrum import Classification

    warnings: list[str] = []
    pairs = spectrum.pairs

    if len(pairs) != spectrum.n_max:
        warnings.append(f"{len(pairs)} eigenpairs for n_max={spectrum.n_max}")
        for w in warnings:
            logger.warning("[%s] %s", label, w)
        return False, warnings

    valid = True
    for i, pair in enumerate(pairs):
        if pair.classification is Classification.PAIR:
            j = pair.partner
            if j is None or pairs[j].partner != i:
                warnings.append(f"level {i}: PairMember without a reciprocal partner")
                valid = False

    unclassified = spectrum.count(Classification.UNCLASSIFIED)
    if unclassified:
        warnings.append(f"{unclassified} unclassified eigenvalue(s)")

    if matrix is not None:
        trace = matrix.trace
        total = complex(np.sum(spectrum.values))
        if abs(total - trace) > TRACE_REL_TOL * max(1.0, abs(trace)):
            warnings.append(f"eigenvalue sum {total:.12g} deviates from trace {trace:.12g}")

    defect = conjugation_defect(spectrum.values[:CONJUGATE_CLOSURE_LEVELS])
    if defect > CONJUGATE_CLOSURE_TOL:
        warnings.append(f"lowest {CONJUGATE_CLOSURE_LEVELS} levels not closed under conjugation (defect {defect:.2e})")

    for w in warnings:
        logger.warning("[%s] %s", label, w)

    return valid, warnings
