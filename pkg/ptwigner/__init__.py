"""Spectra, Wigner distributions and Wigner flow of the -(ix)^eps oscillator family."""

__version__ = "1.0.0"
