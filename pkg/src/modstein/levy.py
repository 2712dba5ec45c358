"""Subordinators, their Laplace exponents and exponential tilting.

A subordinator ``X_t`` with killing rate ``k``, drift ``d`` and Levy measure
``Pi`` on ``(0, inf)`` has ``E[exp(-theta X_t)] = exp(-t Lambda(theta))`` with

    Lambda(theta) = k + d theta + int (1 - exp(-theta u)) Pi(du).

Tilting by ``exp(-y u)`` on the Levy measure gives the Esscher transform of
the marginal law. Only measures with compact support are handled, so every
tilt, including ``y < 0``, is well defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy import special, stats

from .errors import HypothesisError, RangeError, ToleranceNotMet
from .numerics import integrate_interval, invert_monotone
from .penalize import PenalizingFunction

_EULER = float(np.euler_gamma)
_MAX_JUMPS = 50_000_000


def _ein(z: float) -> float:
    """``int_0^z (1 - exp(-t)) / t dt``, the entire exponential integral."""
    if abs(z) <= 2.0:
        term, total, k = z, z, 1
        while abs(term) > 1e-18 * max(abs(total), 1e-300):
            term *= -z * k / ((k + 1) ** 2)
            k += 1
            total += term
        return total
    if z > 0:
        return _EULER + math.log(z) + float(special.exp1(z))
    return -(float(special.expi(-z)) - _EULER - math.log(-z))


def _ein_prime(z: float) -> float:
    """``(1 - exp(-z)) / z`` with the limit 1 at 0."""
    return 1.0 if z == 0 else -math.expm1(-z) / z


@dataclass(frozen=True)
class AtomicMeasure:
    positions: tuple[float, ...]
    masses: tuple[float, ...]

    def __post_init__(self):
        if len(self.positions) != len(self.masses) or not self.positions:
            raise HypothesisError("atomic measure needs matching, nonempty positions and masses")
        if any(p <= 0 for p in self.positions) or any(m <= 0 for m in self.masses):
            raise HypothesisError("atoms need positive positions and masses")

    def laplace_integral(self, theta: float) -> float:
        return math.fsum(m * -math.expm1(-theta * u) for u, m in zip(self.positions, self.masses))

    def first_moment_transform(self, y: float) -> float:
        return math.fsum(m * u * math.exp(-y * u) for u, m in zip(self.positions, self.masses))

    def small_jump_mean(self, eps: float) -> float:
        return math.fsum(m * u for u, m in zip(self.positions, self.masses) if u < eps)

    def tilted(self, y: float) -> "AtomicMeasure":
        return AtomicMeasure(self.positions,
                             tuple(m * math.exp(-y * u) for u, m in zip(self.positions, self.masses)))

    def sample_sum(self, rng: np.random.Generator, t: float, eps: float, n: int) -> np.ndarray:
        total = np.zeros(n)
        for u, m in zip(self.positions, self.masses):
            if u >= eps:
                total += u * rng.poisson(t * m, n)
        return total


@dataclass(frozen=True)
class DickmanMeasure:
    """``exp(-tilt u) du / u`` on ``(0, 1]``; ``tilt = 0`` is the Dickman measure."""

    tilt: float = 0.0

    def laplace_integral(self, theta: float) -> float:
        return _ein(theta + self.tilt) - _ein(self.tilt)

    def first_moment_transform(self, y: float) -> float:
        return _ein_prime(y + self.tilt)

    def small_jump_mean(self, eps: float) -> float:
        # int_0^eps exp(-tilt u) du <= eps * max(1, exp(-tilt eps))
        return eps * max(1.0, math.exp(-self.tilt * eps))

    def tilted(self, y: float) -> "DickmanMeasure":
        return DickmanMeasure(self.tilt + y)

    def mass_above(self, eps: float) -> float:
        if self.tilt == 0:
            return -math.log(eps)
        return integrate_interval(lambda t: np.exp(-self.tilt * np.exp(t)),
                                  math.log(eps), 0.0, rel_tol=1e-13).value

    def sample_sum(self, rng: np.random.Generator, t: float, eps: float, n: int) -> np.ndarray:
        rate = t * self.mass_above(eps)
        counts = _poisson_counts(rng, rate, n)
        total = int(counts.sum())
        log_eps = math.log(eps)
        if self.tilt == 0:
            jumps = np.exp(log_eps * (1 - rng.random(total)))
        else:
            # log-uniform proposals, accepted with probability exp(-tilt (u - u_best))
            best = eps if self.tilt > 0 else 1.0
            jumps = np.empty(0)
            while jumps.size < total:
                m = max(1024, int(1.3 * (total - jumps.size)))
                u = np.exp(log_eps * (1 - rng.random(m)))
                keep = rng.random(m) < np.exp(-self.tilt * (u - best))
                jumps = np.concatenate([jumps, u[keep]])
            jumps = jumps[:total]
        return np.bincount(np.repeat(np.arange(n), counts), weights=jumps, minlength=n)


@dataclass(frozen=True)
class DensityMeasure:
    """Levy measure ``density(u) du`` on ``[lower, upper]`` with ``0 <= lower < upper < inf``."""

    density: Callable[[np.ndarray], np.ndarray]
    lower: float
    upper: float
    name: str = "density"
    tilt: float = 0.0

    def __post_init__(self):
        if not 0 <= self.lower < self.upper < math.inf:
            raise HypothesisError("density measure needs a bounded support in [0, inf)")
        mass = integrate_interval(lambda u: np.minimum(u, 1.0) * self._dens(u),
                                  self.lower, self.upper, rel_tol=1e-10)
        if not math.isfinite(mass.value):
            raise HypothesisError("Levy measure must integrate min(1, u)")

    def _dens(self, u):
        u = np.asarray(u, dtype=float)
        return self.density(u) * np.exp(-self.tilt * u)

    def laplace_integral(self, theta: float) -> float:
        return integrate_interval(lambda u: -np.expm1(-theta * u) * self._dens(u),
                                  self.lower, self.upper, rel_tol=1e-13).value

    def first_moment_transform(self, y: float) -> float:
        return integrate_interval(lambda u: u * np.exp(-y * u) * self._dens(u),
                                  self.lower, self.upper, rel_tol=1e-13).value

    def small_jump_mean(self, eps: float) -> float:
        if eps <= self.lower:
            return 0.0
        return integrate_interval(lambda u: u * self._dens(u), self.lower,
                                  min(eps, self.upper), rel_tol=1e-10).value

    def tilted(self, y: float) -> "DensityMeasure":
        return DensityMeasure(self.density, self.lower, self.upper, self.name, self.tilt + y)

    def sample_sum(self, rng: np.random.Generator, t: float, eps: float, n: int,
                   table: int = 20_001) -> np.ndarray:
        lo = max(eps, self.lower)
        # jump sizes by inversion of a tabulated distribution function (log scale)
        grid = np.exp(np.linspace(math.log(lo), math.log(self.upper), table)) if lo > 0 \
            else np.linspace(lo, self.upper, table)
        dens = self._dens(grid)
        cum = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) / 2 * np.diff(grid))])
        rate = t * cum[-1]
        counts = _poisson_counts(rng, rate, n)
        jumps = np.interp(rng.random(int(counts.sum())) * cum[-1], cum, grid)
        return np.bincount(np.repeat(np.arange(n), counts), weights=jumps, minlength=n)


LevyMeasure = Union[AtomicMeasure, DickmanMeasure, DensityMeasure]


def _poisson_counts(rng: np.random.Generator, rate: float, n: int) -> np.ndarray:
    if rate * n > _MAX_JUMPS:
        raise HypothesisError(
            f"small-jump cutoff too small: implied jump rate {rate:.3e} per path "
            f"({rate * n:.3e} jumps in total)")
    return rng.poisson(rate, n)


@dataclass(frozen=True)
class LevyTriplet:
    kill: float
    drift: float
    measure: LevyMeasure | None

    def __post_init__(self):
        if self.kill < 0 or self.drift < 0:
            raise HypothesisError("killing rate and drift must be nonnegative")

    @classmethod
    def poisson(cls) -> "LevyTriplet":
        return cls(0.0, 0.0, AtomicMeasure((1.0,), (1.0,)))

    @classmethod
    def dickman(cls) -> "LevyTriplet":
        return cls(0.0, 0.0, DickmanMeasure())


@dataclass(frozen=True)
class TiltedTriplet:
    """The triplet ``(0, d, exp(-y u) Pi(du))``."""

    base: LevyTriplet
    y: float

    def effective(self) -> LevyTriplet:
        m = self.base.measure
        return LevyTriplet(0.0, self.base.drift, None if m is None else m.tilted(self.y))


Triplet = Union[LevyTriplet, TiltedTriplet]


def laplace_exponent(t: Triplet, theta: float) -> float:
    if isinstance(t, TiltedTriplet):
        return laplace_exponent(t.base, theta + t.y) - laplace_exponent(t.base, t.y)
    integral = 0.0 if t.measure is None else t.measure.laplace_integral(theta)
    return t.kill + t.drift * theta + integral


def lambda_prime(t: Triplet, y: float) -> float:
    if isinstance(t, TiltedTriplet):
        return lambda_prime(t.base, y + t.y)
    moment = 0.0 if t.measure is None else t.measure.first_moment_transform(y)
    return t.drift + moment


def lambda_prime_range(t: Triplet) -> tuple[float, float]:
    """Open range of ``Lambda'``: from the drift (``y -> inf``) to infinity (``y -> -inf``)."""
    base = t.base if isinstance(t, TiltedTriplet) else t
    if base.measure is None:
        return base.drift, base.drift
    return base.drift, math.inf


def upsilon(t: Triplet, x: float, tol: float = 1e-10) -> float:
    """The inverse of ``Lambda'``; values outside its range raise :class:`RangeError`."""
    lo_val, hi_val = lambda_prime_range(t)
    if not lo_val < x < hi_val:
        raise RangeError(f"{x!r} lies outside the range ({lo_val}, {hi_val}) of Lambda'")
    lo, hi = -1.0, 1.0
    while lambda_prime(t, hi) > x:
        hi = 2 * hi + 1
        if hi > 1e8:
            raise RangeError(f"{x!r} too close to the lower end of the range of Lambda'")
    while lambda_prime(t, lo) < x:
        lo = 2 * lo - 1
        if lo < -1e4:
            raise RangeError(f"{x!r} too large for a stable inversion of Lambda'")
    return invert_monotone(lambda v: lambda_prime(t, v), x, (lo, hi),
                           tol=tol * max(1.0, abs(x)))


def tilt(t: Triplet, y: float) -> TiltedTriplet:
    if isinstance(t, TiltedTriplet):
        return TiltedTriplet(t.base, t.y + y)
    return TiltedTriplet(t, y)


def tilted_laplace_functional(t: TiltedTriplet, gamma: float, theta: float) -> float:
    """``E[exp(-theta X^{(y)}_gamma)] = exp(-gamma (Lambda(theta + y) - Lambda(y)))``."""
    return math.exp(-gamma * laplace_exponent(t, theta))


def sample_subordinator(t: Triplet, gamma: float, eps: float, n: int, seed) -> np.ndarray:
    """Draws of ``X_gamma`` with jumps below ``eps`` discarded.

    Jumps of size at least ``eps`` form a compound Poisson process and are
    simulated exactly (atoms, the Dickman family) or by inversion of a
    tabulated distribution function (general densities). The discarded
    small jumps bias the mean down by ``gamma * int_0^eps u Pi(du)``, which
    :func:`truncation_bias` reports. A killed subordinator is not sampled.
    """
    if not eps > 0:
        raise HypothesisError("eps must be positive")
    if n < 1:
        raise HypothesisError("n must be at least 1")
    eff = t.effective() if isinstance(t, TiltedTriplet) else t
    if eff.kill > 0:
        raise HypothesisError("killed subordinators have no finite marginal to sample")
    rng = np.random.default_rng(seed)
    out = np.full(n, eff.drift * gamma)
    if eff.measure is not None:
        out += eff.measure.sample_sum(rng, gamma, eps, n)
    return out


def truncation_bias(t: Triplet, gamma: float, eps: float) -> float:
    eff = t.effective() if isinstance(t, TiltedTriplet) else t
    return 0.0 if eff.measure is None else gamma * eff.measure.small_jump_mean(eps)


# duality

def exponential_weight(rate: float = 1.0) -> PenalizingFunction:
    """``exp(rate (1 - t))`` on the half-line, equal to 1 at ``t = 1``."""
    return PenalizingFunction(
        f"exp({rate:g}(1-t))",
        eval=lambda u: np.exp(rate * (1 - np.asarray(u, dtype=float))),
        log_eval=lambda u: rate * (1 - np.asarray(u, dtype=float)),
        dlog_eval=lambda u: np.full_like(np.asarray(u, dtype=float), -rate),
        sup_norm=math.exp(rate), phi_at_zero_is_one=False, even_symmetric=False,
        integrable_on_line=False)


def _poisson_expectation(fn, mean: float, tail: float = 1e-16) -> float:
    """``E[fn(P)]`` for ``P ~ Poisson(mean)``, truncated where the tail mass is below ``tail``."""
    if mean == 0:
        return float(fn(np.array([0.0]))[0])
    top = int(stats.poisson.isf(tail, mean)) + 10
    k = np.arange(top + 1, dtype=float)
    return math.fsum(stats.poisson.pmf(k, mean) * fn(k))


def _require_weight_bound(phi: PenalizingFunction) -> None:
    if not math.isfinite(phi.sup_norm):
        raise HypothesisError(f"{phi.name}: Poisson series need a bounded weight")


def poisson_char_ratio(phi: PenalizingFunction, gamma: float, x: float,
                       tol: float = 1e-10) -> float:
    """``E[x^{X(phi)}] / E[x^{P_gamma}]`` for the ``phi``-biased Poisson law.

    The left route sums the biased generating function directly; the right
    route is ``E[phi(P_{x gamma}/gamma)] / E[phi(P_gamma/gamma)]``. Both are
    truncated Poisson series and must agree to ``tol``.
    """
    if x < 0:
        raise HypothesisError("x must be nonnegative")
    _require_weight_bound(phi)
    norm = _poisson_expectation(lambda k: phi.eval(k / gamma), gamma)
    right = _poisson_expectation(lambda k: phi.eval(k / gamma), x * gamma) / norm
    if x == 0:
        left = float(phi.eval(np.array(0.0))) * math.exp(-gamma) / norm / math.exp(-gamma)
    else:
        # x^k p_gamma(k) / exp(gamma (x - 1)) is the Poisson(x gamma) mass at k
        top = int(stats.poisson.isf(1e-16, max(gamma, x * gamma))) + 10
        k = np.arange(top + 1, dtype=float)
        log_terms = k * math.log(x) + stats.poisson.logpmf(k, gamma) - gamma * (x - 1)
        left = math.fsum(np.exp(log_terms) * phi.eval(k / gamma)) / norm
    if abs(left - right) > tol * max(1.0, abs(right)):
        raise ToleranceNotMet(f"Poisson routes disagree: {left!r} vs {right!r}",
                              best_estimate=right, error_estimate=abs(left - right))
    return right


@dataclass(frozen=True)
class DualityGap:
    gap: float
    std_error: float  # 0 for exact series
    lhs: float
    rhs: float

    @property
    def exact(self) -> bool:
        return self.std_error == 0.0


def _is_poisson(t: LevyTriplet) -> bool:
    m = t.measure
    return (t.kill == 0 and t.drift == 0 and isinstance(m, AtomicMeasure)
            and m.positions == (1.0,) and m.masses == (1.0,))


def mod_levy_duality_gap(phi: PenalizingFunction, t: LevyTriplet, gamma: float, x: float,
                         n: int = 200_000, eps: float = 1e-6, seed=0) -> DualityGap:
    """Both sides of the duality at ``y = upsilon(x)``.

    The left side is ``E[exp(-y X(phi))] / E[exp(-y X_gamma)]`` for the
    ``phi``-biased law of ``X_gamma``; the right side is
    ``E[phi(X^{(y)}_gamma / gamma)] / E[phi(X_gamma / gamma)]``. Poisson
    triplets use exact series; anything else uses Monte Carlo with a
    delta-method standard error for the gap.
    """
    _require_weight_bound(phi)
    y = upsilon(t, x)
    if _is_poisson(t):
        norm = _poisson_expectation(lambda k: phi.eval(k / gamma), gamma)
        ey = math.exp(-gamma * laplace_exponent(t, y))
        lhs = _poisson_expectation(lambda k: np.exp(-y * k) * phi.eval(k / gamma), gamma) / norm / ey
        rhs = _poisson_expectation(lambda k: phi.eval(k / gamma), gamma * math.exp(-y)) / norm
        return DualityGap(abs(lhs - rhs), 0.0, lhs, rhs)
    rng = np.random.SeedSequence(seed)
    s1, s2 = rng.spawn(2)
    base = sample_subordinator(t, gamma, eps, n, s1)
    tilted = sample_subordinator(tilt(t, y), gamma, eps, n, s2)
    w = phi.eval(base / gamma)
    e = np.exp(-y * base)
    ey = math.exp(-gamma * laplace_exponent(t, y))
    mw, mew = w.mean(), (e * w).mean()
    wt = phi.eval(tilted / gamma)
    lhs = mew / mw / ey
    rhs = wt.mean() / mw
    # delta method: influence of the base draws on lhs - rhs, plus the
    # independent tilted draws
    infl_base = (e * w - lhs * ey * w) / (mw * ey) + (rhs * w) / mw
    var = infl_base.var(ddof=1) / n + wt.var(ddof=1) / (n * mw * mw)
    return DualityGap(abs(lhs - rhs), math.sqrt(var), lhs, rhs)


@dataclass(frozen=True)
class PoissonLimitRow:
    gamma: float
    x: float
    ratio: float
    target: float
    error: float


def poisson_mod_limit(phi: PenalizingFunction, gammas, xs) -> list[PoissonLimitRow]:
    rows = []
    for g in gammas:
        for x in xs:
            r = poisson_char_ratio(phi, g, x)
            target = float(phi.eval(np.array(x)))
            rows.append(PoissonLimitRow(float(g), float(x), r, target, abs(r - target)))
    return rows
