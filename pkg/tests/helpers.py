import numpy as np


def fock(n: int, size: int | None = None) -> np.ndarray:
    """Coefficient vector of the n-th oscillator state."""
    c = np.zeros(size or n + 1, dtype=complex)
    c[n] = 1.0
    return c
