"""The penalized Gaussian law with density ``exp(-a x^2/2 - b x^4/4) / z``.

Here ``a = gamma**-2`` and ``b = C * gamma**-8``. Tail quantities are computed
through scaled tail integrals

    S_k(y) = int_0^inf s^k exp(-(kappa(y + s) - kappa(y))) ds,   y >= 0,

so that ratios such as ``tail(x) / pdf(x)`` stay accurate long after the
density itself has underflowed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import HypothesisError
from .numerics import GaussianEnvelope, GridFunction, half_line_rule, integrate_line


@dataclass(frozen=True)
class Phi4Params:
    """Scale ``gamma`` and quartic strength ``c_quartic`` of the law.

    ``c_quartic`` must lie in ``(0, 3]``. The Gaussian reference law
    (``c_quartic = 0``) is available through :meth:`gaussian` only.
    """

    gamma: float
    c_quartic: float
    _allow_gaussian: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        g, c = float(self.gamma), float(self.c_quartic)
        if not (math.isfinite(g) and g > 0):
            raise HypothesisError(f"gamma must be positive, got {self.gamma!r}")
        lower_ok = c >= 0 if self._allow_gaussian else c > 0
        if not (math.isfinite(c) and lower_ok and c <= 3):
            raise HypothesisError(f"c_quartic must lie in (0, 3], got {self.c_quartic!r}")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "c_quartic", c)

    @classmethod
    def gaussian(cls, gamma: float) -> "Phi4Params":
        """The N(0, gamma^2) law seen as the C = 0 member of the family."""
        return cls(gamma, 0.0, _allow_gaussian=True)

    @property
    def a(self) -> float:
        return self.gamma ** -2

    @property
    def b(self) -> float:
        return self.c_quartic * self.gamma ** -8

    # potential and its derivatives
    def kappa(self, x):
        x = np.abs(np.asarray(x, dtype=float))  # exactly even in floating point
        return self.a * x * x / 2 + self.b * x ** 4 / 4

    def kappa_increment(self, y, s):
        """``kappa(y + s) - kappa(y)`` without cancellation."""
        y = np.asarray(y, dtype=float)
        s = np.asarray(s, dtype=float)
        quartic = s * (4 * y ** 3 + s * (6 * y * y + s * (4 * y + s))) / 4
        return self.a * (y * s + s * s / 2) + self.b * quartic

    def rho(self, x):
        x = np.asarray(x, dtype=float)
        return self.a * x + self.b * x ** 3

    def rho_prime(self, x):
        x = np.asarray(x, dtype=float)
        return self.a + 3 * self.b * x * x

    def rho_second(self, x):
        return 6 * self.b * np.asarray(x, dtype=float)

    def rho_tilde(self, x):
        """``rho(x) / x``, finite at the origin."""
        x = np.asarray(x, dtype=float)
        return self.a + self.b * x * x

    def cubic_rho_combination(self, x):
        """``rho'' + 3 rho rho' + rho^3``."""
        r = self.rho(x)
        return self.rho_second(x) + 3 * r * self.rho_prime(x) + r ** 3

    def quadratic_rho_combination(self, x):
        """``2 rho' + rho^2``."""
        return 2 * self.rho_prime(x) + self.rho(x) ** 2

    def q_hat(self, x):
        """Rational lower envelope for ``psi / pdf`` on the positive half-line."""
        a, b = self.a, self.b
        x2 = np.asarray(x, dtype=float) ** 2
        num = ((b * b * x2 + 2 * a * b) * x2 + (a * a + 7 * b)) * x2 + 3 * a
        den = ((((b ** 3) * x2 + 3 * a * b * b) * x2 + 3 * b * (a * a + 3 * b)) * x2
               + a * (a * a + 12 * b)) * x2 + 3 * (a * a + 2 * b)
        return num / den

    def decay_length(self, y):
        """Length scale over which ``exp(-(kappa(y+s) - kappa(y)))`` decays."""
        return 1.0 / (self.rho(np.abs(y)) + 1.0 / self.gamma)


def tail_integrals(params: Phi4Params, y, chunk: int = 512) -> np.ndarray:
    """Scaled tail integrals ``S_0, S_1, S_2`` at ``|y|``; shape ``(3,) + y.shape``."""
    y = np.abs(np.asarray(y, dtype=float))
    flat = y.ravel()
    scales = params.decay_length(flat)
    u, w = half_line_rule()
    out = np.empty((3, flat.size))
    for start in range(0, flat.size, chunk):
        sl = slice(start, start + chunk)
        sc = scales[sl][:, None]
        s = sc * u[None, :]
        weight = np.exp(-params.kappa_increment(flat[sl][:, None], s)) * w[None, :]
        out[0, sl] = weight.sum(axis=1) * scales[sl]
        out[1, sl] = (weight * s).sum(axis=1) * scales[sl]
        out[2, sl] = (weight * s * s).sum(axis=1) * scales[sl]
    return out.reshape((3,) + y.shape)


@dataclass(frozen=True)
class TailFunctionals:
    psi: np.ndarray
    phi_low: np.ndarray
    phi_up: np.ndarray
    chi_low: np.ndarray
    chi_up: np.ndarray


@dataclass(frozen=True)
class Phi4Dist:
    params: Phi4Params
    z_gamma: float
    sigma2: float
    cdf_table: GridFunction

    @property
    def gamma(self) -> float:
        return self.params.gamma

    def pdf(self, x):
        return np.exp(-self.params.kappa(x)) / self.z_gamma

    def log_pdf(self, x):
        return -self.params.kappa(x) - math.log(self.z_gamma)

    def tail_over_pdf(self, x):
        """``P(H >= x) / pdf(x)`` for ``x >= 0`` (the reflected value for ``x < 0``)."""
        return tail_integrals(self.params, x)[0]

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        lower = self.pdf(x) * self.tail_over_pdf(x)
        return np.where(x < 0, lower, 1.0 - lower)

    def tail(self, x):
        return self.cdf(-np.asarray(x, dtype=float))

    def variance_weight(self, x):
        """``(x^2 + sigma^2) / 2``."""
        return (np.asarray(x, dtype=float) ** 2 + self.sigma2) / 2

    def tail_functionals(self, x) -> TailFunctionals:
        x = np.asarray(x, dtype=float)
        y = np.abs(x)
        s0, s1, s2 = tail_integrals(self.params, y)
        f = self.pdf(x)
        psi = f * (y * s0 + s1)
        near = f * s1
        near_sq = f * s2 / 2
        v = self.variance_weight(x)
        pos = x >= 0
        phi_up = np.where(pos, near, near + y)
        phi_low = np.where(pos, near + x, near)
        chi_up = np.where(pos, near_sq, v - near_sq)
        chi_low = np.where(pos, v - near_sq, near_sq)
        return TailFunctionals(psi, phi_low, phi_up, chi_low, chi_up)

    def expect(self, h: Callable[[np.ndarray], np.ndarray], degree: int = 0,
               bound: float = 1.0, rel_tol: float = 1e-12, abs_tol: float = 1e-15) -> float:
        """``E[h(H)]`` for ``|h(x)| <= bound * (1 + |x|)**degree``."""
        return expectation(self, h, degree, bound, rel_tol, abs_tol)


def _growth_envelope(gamma: float, z: float, degree: int, bound: float) -> GaussianEnvelope:
    # (1 + |x|)^p exp(-x^2 / (2 g^2)) <= A exp(-x^2 / (4 g^2)) with A the max of
    # (1 + x)^p exp(-x^2 / (4 g^2)) over x >= 0.
    if degree == 0:
        amp = 1.0
    else:
        xm = (-1 + math.sqrt(1 + 8 * degree * gamma * gamma)) / 2
        amp = (1 + xm) ** degree * math.exp(-xm * xm / (4 * gamma * gamma))
    return GaussianEnvelope(0.0, math.sqrt(2) * gamma, bound * amp / z)


def expectation(dist, h, degree: int = 0, bound: float = 1.0, rel_tol: float = 1e-12,
                abs_tol: float = 1e-15) -> float:
    env = _growth_envelope(dist.gamma, dist.z_gamma, degree, bound)
    res = integrate_line(lambda x: h(x) * dist.pdf(x), rel_tol=rel_tol, envelope=env,
                         abs_tol=abs_tol)
    return res.value


def make_dist(params: Phi4Params, rel_tol: float = 1e-13, table_size: int = 2001) -> Phi4Dist:
    """Normalise the law, compute its variance and tabulate its CDF."""
    g = params.gamma
    z = integrate_line(lambda x: np.exp(-params.kappa(x)), rel_tol=rel_tol,
                       envelope=GaussianEnvelope(0.0, g, 1.0)).value
    env = GaussianEnvelope(0.0, math.sqrt(2) * g, 4 * g * g / math.e / z)
    second = integrate_line(lambda x: x * x * np.exp(-params.kappa(x)) / z,
                            rel_tol=rel_tol, envelope=env).value
    xs = np.linspace(-12 * g, 12 * g, table_size)
    f = np.exp(-params.kappa(xs)) / z
    lower = f * tail_integrals(params, xs)[0]
    table = GridFunction(xs, np.where(xs < 0, lower, 1.0 - lower), tail_model="mills-ratio")
    return Phi4Dist(params, z, second, table)


def pdf(dist: Phi4Dist, x):
    return dist.pdf(x)


def cdf(dist: Phi4Dist, x):
    return dist.cdf(x)


def tail(dist: Phi4Dist, x):
    return dist.tail(x)


def tail_functionals(dist: Phi4Dist, x) -> TailFunctionals:
    return dist.tail_functionals(x)


def moment(dist: Phi4Dist, k: int, rel_tol: float = 1e-13) -> float:
    """Even moment ``E[H^k]`` for ``k <= 12``."""
    if k < 0 or k > 12 or k % 2:
        raise HypothesisError("moment needs an even degree between 0 and 12")
    if k == 0:
        return 1.0
    return expectation(dist, lambda x: x ** k, degree=k, rel_tol=rel_tol, abs_tol=0.0)


def rejection_sample(dist: Phi4Dist, n: int, seed: int) -> tuple[np.ndarray, float]:
    """Draws and empirical acceptance rate.

    Proposals are N(0, gamma^2) and are kept with probability
    ``exp(-b x^4 / 4)``; the expected acceptance rate is ``z / (gamma sqrt(2 pi))``.
    """
    if n < 1:
        raise HypothesisError("n must be at least 1")
    rng = np.random.default_rng(seed)
    g, b = dist.params.gamma, dist.params.b
    kept: list[np.ndarray] = []
    have = proposed = 0
    while have < n:
        m = max(1024, int(1.1 * (n - have)) + 16)
        x = rng.normal(0.0, g, m)
        u = rng.random(m)
        acc = x[u < np.exp(-b * x ** 4 / 4)]
        take = acc[: n - have]
        # proposals consumed up to the last accepted draw that we keep
        if take.size < acc.size:
            idx = np.flatnonzero(u < np.exp(-b * x ** 4 / 4))[take.size - 1]
            proposed += idx + 1
        else:
            proposed += m
        kept.append(take)
        have += take.size
    return np.concatenate(kept), n / proposed


def sample(dist: Phi4Dist, n: int, seed: int) -> np.ndarray:
    return rejection_sample(dist, n, seed)[0]
