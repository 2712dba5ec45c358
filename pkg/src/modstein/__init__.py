"""Penalized Gaussian laws, their Stein operators and explicit-bound checks."""

__version__ = "0.1.0"
