"""Exception types shared across the package."""

from __future__ import annotations


class PtWignerError(Exception):
    """Base class for every error raised by ptwigner."""


class SpecialFunctionDomainError(PtWignerError, ValueError):
    """Argument outside the documented domain or safe range of a special function."""


class ConvergenceError(PtWignerError, RuntimeError):
    """A refinement loop, domain growth or eigenvalue iteration did not converge."""


class InvalidBracketError(PtWignerError, ValueError):
    """EP bisection bracket whose indicator is identical at both ends."""

    def __init__(self, message: str, lower: str, upper: str) -> None:
        super().__init__(message)
        self.lower = lower
        self.upper = upper


class GridError(PtWignerError, ValueError):
    """Phase-space grid mismatch, too coarse, or not covering the state's support."""


class RealnessError(PtWignerError, ArithmeticError):
    """Imaginary residue of a quantity that must be real exceeds its threshold."""
