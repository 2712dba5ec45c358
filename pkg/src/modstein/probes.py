"""Smooth test functions with exact derivatives.

``Probe`` carries a function and its first two derivatives as vectorised
callables, together with a polynomial growth bound used to build quadrature
envelopes. ``GaussianPolynomial`` represents ``q(x) exp(-x^2 / (2 s^2))`` and
can differentiate itself any number of times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial

Fn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Probe:
    name: str
    value: Fn
    d1: Fn
    d2: Fn
    growth_degree: int = 0  # |h|, |h'|, |h''| <= growth_bound * (1 + |x|)**growth_degree
    growth_bound: float = 1.0
    vanishes_at_infinity: bool = True

    def scaled(self, factor: float, name: str | None = None) -> "Probe":
        return Probe(name or f"{factor:g}*{self.name}",
                     lambda x: factor * self.value(x), lambda x: factor * self.d1(x),
                     lambda x: factor * self.d2(x), self.growth_degree,
                     abs(factor) * self.growth_bound, self.vanishes_at_infinity)


@dataclass(frozen=True)
class GaussianPolynomial:
    """``q(x) exp(-x^2 / (2 s^2))`` with ``q`` a polynomial."""

    poly: Polynomial
    s: float = 1.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.poly(x) * np.exp(-x * x / (2 * self.s ** 2))

    def derivative(self, k: int = 1) -> "GaussianPolynomial":
        q = self.poly
        lin = Polynomial([0.0, -1.0 / self.s ** 2])
        for _ in range(k):
            q = q.deriv() + lin * q
        return GaussianPolynomial(q, self.s)

    def sup_bound(self) -> float:
        """Crude bound on the supremum: sum of |coef| * max_x |x|^j exp(-x^2/(2 s^2))."""
        total = 0.0
        for j, c in enumerate(self.poly.coef):
            if c == 0:
                continue
            peak = 1.0 if j == 0 else (j * self.s ** 2) ** (j / 2) * math.exp(-j / 2)
            total += abs(c) * peak
        return total

    def to_probe(self, name: str) -> Probe:
        d1, d2 = self.derivative(1), self.derivative(2)
        bound = max(self.sup_bound(), d1.sup_bound(), d2.sup_bound())
        return Probe(name, self, d1, d2, 0, bound)


def gaussian_bump(width: float = 1.0, name: str | None = None) -> Probe:
    """``exp(-x^2 / (2 width^2))``."""
    return GaussianPolynomial(Polynomial([1.0]), width).to_probe(
        name or f"exp(-x^2/{2 * width * width:g})")


def cauchy_bump() -> Probe:
    """``1 / (1 + x^2)``."""

    def d1(x):
        return -2 * x / (1 + x * x) ** 2

    def d2(x):
        return (6 * x * x - 2) / (1 + x * x) ** 3

    return Probe("1/(1+x^2)", lambda x: 1 / (1 + np.asarray(x) ** 2), d1, d2, 0, 2.0)


def odd_bump() -> Probe:
    """``x exp(-x^2 / 4)``."""
    return GaussianPolynomial(Polynomial([0.0, 1.0]), math.sqrt(2)).to_probe("x*exp(-x^2/4)")


def sine_bump() -> Probe:
    """``sin(x) exp(-x^2 / 4)``."""

    def value(x):
        return np.sin(x) * np.exp(-np.asarray(x) ** 2 / 4)

    def d1(x):
        x = np.asarray(x)
        return (np.cos(x) - x * np.sin(x) / 2) * np.exp(-x * x / 4)

    def d2(x):
        x = np.asarray(x)
        return (-np.sin(x) - x * np.cos(x) + (x * x / 4 - 0.5) * np.sin(x)) * np.exp(-x * x / 4)

    return Probe("sin(x)*exp(-x^2/4)", value, d1, d2, 0, 3.0)


def cubic() -> Probe:
    """``x^3`` (unbounded; only for characterisation residuals)."""
    return Probe("x^3", lambda x: np.asarray(x) ** 3, lambda x: 3 * np.asarray(x) ** 2,
                 lambda x: 6 * np.asarray(x), 3, 6.0, vanishes_at_infinity=False)


def characterization_probes() -> list[Probe]:
    return [gaussian_bump(), cauchy_bump(), odd_bump(), sine_bump(), cubic()]


def operator_norm_probes() -> list[Probe]:
    return [gaussian_bump(), cauchy_bump(), gaussian_bump(math.sqrt(2))]
