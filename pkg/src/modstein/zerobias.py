"""Zero-bias and cubic-bias transforms.

For a centred ``W`` and an odd weight ``q`` the biased law has density
``E[q(W) 1{W >= x}] / E[W q(W)]``. The zero-bias transform is ``q(w) = w``;
the cubic bias uses ``q(w) = w + c3 w^3``, whose fixed point is the quartic
law with ``c3 = C / gamma^6``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from .errors import HypothesisError
from .numerics import GridFunction, half_line_rule
from .phi4 import Phi4Dist, moment

_SUM_TOL = 1e-14


@dataclass(frozen=True)
class DiscreteDist:
    """Finite law with strictly increasing atoms and positive probabilities."""

    atoms: np.ndarray
    probs: np.ndarray
    require_symmetric: bool = True
    moments: tuple[float, float, float, float] = field(init=False)
    _allow_degenerate: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        if atoms.ndim != 1 or atoms.shape != probs.shape or atoms.size == 0:
            raise HypothesisError("atoms and probs must be matching 1-d arrays")
        if np.any(np.diff(atoms) <= 0):
            raise HypothesisError("atoms must be strictly increasing")
        if np.any(~(probs > 0)):
            raise HypothesisError("probabilities must be positive")
        if abs(math.fsum(probs) - 1) > _SUM_TOL * max(1, atoms.size):
            raise HypothesisError(f"probabilities sum to {math.fsum(probs)!r}, not 1")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)
        m = tuple(math.fsum(probs * atoms ** k) for k in range(1, 5))
        object.__setattr__(self, "moments", m)
        if self.require_symmetric:
            scale = max(1.0, float(np.max(np.abs(atoms))))
            if not (np.allclose(atoms, -atoms[::-1], rtol=0, atol=1e-12 * scale)
                    and np.allclose(probs, probs[::-1], rtol=1e-12, atol=1e-300)):
                raise HypothesisError("law must be symmetric about 0")
        if not (m[1] > 0 or self._allow_degenerate):
            raise HypothesisError("law must have positive variance")

    @classmethod
    def rademacher(cls) -> "DiscreteDist":
        return cls(np.array([-1.0, 1.0]), np.array([0.5, 0.5]))

    def expect(self, fn) -> float:
        return math.fsum(self.probs * fn(self.atoms))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        cum = np.concatenate([[0.0], np.cumsum(self.probs)])
        return cum[np.searchsorted(self.atoms, x, side="right")]

    def scaled(self, factor: float) -> "DiscreteDist":
        return DiscreteDist(self.atoms * factor, self.probs, self.require_symmetric)

    @property
    def fourth_moment_constant(self) -> float:
        """``(3 - E X^4) / 6`` for a unit-variance law."""
        return (3 - self.moments[3]) / 6


@dataclass(frozen=True)
class PiecewiseDensity:
    """Density given by one polynomial per interval ``[breakpoints[i], breakpoints[i+1])``."""

    breakpoints: np.ndarray
    pieces: tuple[Polynomial, ...]

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        if bp.size != len(self.pieces) + 1 or np.any(np.diff(bp) <= 0):
            raise HypothesisError("need strictly increasing breakpoints, one more than pieces")
        if any(p.degree() > 3 for p in self.pieces):
            raise HypothesisError("pieces are at most cubic")
        object.__setattr__(self, "breakpoints", bp)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        out = np.zeros(x.shape)
        for i, p in enumerate(self.pieces):
            mask = idx == i
            if np.any(mask):
                out[mask] = p(x[mask])
        return out

    def integrate(self, poly: Polynomial | None = None, lo: float = -math.inf,
                  hi: float = math.inf) -> float:
        """``int_lo^hi poly(x) density(x) dx`` exactly."""
        poly = Polynomial([1.0]) if poly is None else poly
        terms = []
        for a, b, p in zip(self.breakpoints[:-1], self.breakpoints[1:], self.pieces):
            a, b = max(a, lo), min(b, hi)
            if b <= a:
                continue
            anti = (p * poly).integ()
            terms.append(anti(b) - anti(a))
        return math.fsum(terms)

    @property
    def mass(self) -> float:
        return self.integrate()

    def cdf(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        edges = self.breakpoints
        cum = np.concatenate([[0.0], np.cumsum(
            [p.integ()(b) - p.integ()(a) for a, b, p in zip(edges[:-1], edges[1:], self.pieces)])])
        idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, len(self.pieces) - 1)
        out = np.empty(x.shape)
        for k, (i, t) in enumerate(zip(idx, x)):
            if t <= edges[0]:
                out[k] = 0.0
            elif t >= edges[-1]:
                out[k] = cum[-1]
            else:
                anti = self.pieces[i].integ()
                out[k] = cum[i] + anti(t) - anti(edges[i])
        return out

    def moment(self, k: int) -> float:
        return self.integrate(Polynomial([0.0] * k + [1.0]))

    def abs_moment(self, k: int) -> float:
        mono = Polynomial([0.0] * k + [1.0])
        return self.integrate(mono, lo=0.0) + (-1) ** k * self.integrate(mono, hi=0.0)


def _biased(dist: DiscreteDist, weight: Polynomial, normaliser: float) -> PiecewiseDensity:
    # E[q(W) 1{W > x}] is constant between consecutive atoms
    vals = dist.probs * weight(dist.atoms)
    upper = np.concatenate([np.cumsum(vals[::-1])[::-1], [0.0]])
    pieces = tuple(Polynomial([upper[i + 1] / normaliser]) for i in range(dist.atoms.size - 1))
    return PiecewiseDensity(dist.atoms, pieces)


def _check_centred(dist: DiscreteDist) -> None:
    scale = max(1.0, float(np.max(np.abs(dist.atoms))))
    if abs(dist.moments[0]) > 1e-13 * scale:
        raise HypothesisError("zero-bias needs a centred law")


def zero_bias(dist: DiscreteDist) -> PiecewiseDensity:
    """Density ``E[X 1{X > x}] / E X^2``, constant between atoms."""
    _check_centred(dist)
    return _biased(dist, Polynomial([0.0, 1.0]), dist.moments[1])


def zero_bias_identity_gap(dist: DiscreteDist, f: Polynomial) -> float:
    """``|E[X f(X)] - E X^2 E f'(X^(0))|`` with both sides exact."""
    f = f if isinstance(f, Polynomial) else Polynomial(f)
    if f.degree() > 5:
        raise HypothesisError("identity check is for polynomials of degree at most 5")
    zb = zero_bias(dist)
    lhs = dist.expect(lambda x: x * f(x))
    rhs = dist.moments[1] * zb.integrate(f.deriv())
    return abs(lhs - rhs)


def zero_bias_moments(dist: DiscreteDist) -> tuple[float, float]:
    """``(E|X^(0)|, E (X^(0))^2) = (E|X|^3 / (2 E X^2), E X^4 / (3 E X^2))``."""
    m2 = dist.moments[1]
    abs3 = dist.expect(lambda x: np.abs(x) ** 3)
    return abs3 / (2 * m2), dist.moments[3] / (3 * m2)


def zero_bias_moments_by_integration(dist: DiscreteDist) -> tuple[float, float]:
    zb = zero_bias(dist)
    x = Polynomial([0.0, 1.0])
    return zb.integrate(x, lo=0.0) - zb.integrate(x, hi=0.0), zb.integrate(x * x)


def independent_coupling_distance(dist: DiscreteDist) -> float:
    """``E|X - X^(0)|`` for ``X`` independent of its zero-bias copy."""
    zb = zero_bias(dist)
    total = []
    for a, p in zip(dist.atoms, dist.probs):
        lin = Polynomial([-a, 1.0])
        total.append(p * (zb.integrate(lin, lo=a) - zb.integrate(lin, hi=a)))
    return math.fsum(total)


@dataclass(frozen=True)
class ShiftMixture:
    """Law of ``(S + Y) / scale`` with ``S`` discrete and ``Y`` piecewise continuous, independent."""

    shifts: DiscreteDist
    kernel: PiecewiseDensity
    scale: float = 1.0

    def cdf(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float)) * self.scale
        out = np.zeros(x.shape)
        for s, p in zip(self.shifts.atoms, self.shifts.probs):
            out += p * self.kernel.cdf(x - s)
        return out

    def pdf(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float)) * self.scale
        out = np.zeros(x.shape)
        for s, p in zip(self.shifts.atoms, self.shifts.probs):
            out += p * self.kernel.pdf(x - s)
        return out * self.scale

    @property
    def mass(self) -> float:
        return math.fsum(self.shifts.probs) * self.kernel.mass


def _lattice_step(atoms: np.ndarray) -> float:
    diffs = np.diff(atoms)
    step = float(np.min(diffs))
    ratio = (atoms - atoms[0]) / step
    if np.max(np.abs(ratio - np.round(ratio))) > 1e-9:
        raise HypothesisError("exact sums are implemented for lattice laws only")
    return step


MAX_EXACT_TERMS = 2 ** 12


def convolution_power(dist: DiscreteDist, n: int) -> DiscreteDist:
    """Exact law of ``X_1 + ... + X_n`` for a lattice law (binary powering)."""
    if not 0 <= n <= MAX_EXACT_TERMS:
        raise HypothesisError(f"n must lie in [0, {MAX_EXACT_TERMS}]")
    if n == 0:
        return DiscreteDist(np.array([0.0]), np.array([1.0]), _allow_degenerate=True)
    step = _lattice_step(dist.atoms) if dist.atoms.size > 1 else 1.0
    idx = np.round((dist.atoms - dist.atoms[0]) / step).astype(int)
    base = np.zeros(idx[-1] + 1)
    base[idx] = dist.probs
    result, power, k = np.array([1.0]), base, n
    while k:
        if k & 1:
            result = np.convolve(result, power)
        k >>= 1
        if k:
            power = np.convolve(power, power)
    atoms = n * dist.atoms[0] + step * np.arange(result.size)
    keep = result > 0  # entries below the double-precision floor underflow to 0
    atoms, probs = atoms[keep], result[keep]
    # snap near-zero atoms produced by rounding in n * atoms[0]
    atoms = np.where(np.abs(atoms) < 1e-9 * step, 0.0, atoms)
    return DiscreteDist(atoms, probs / math.fsum(probs), dist.require_symmetric)


def sum_zero_bias_law(dist: DiscreteDist, n: int, scale: float | None = None) -> ShiftMixture:
    """Law of ``(sum_{k != I} X_k + X_I^(0)) / gamma_n`` with ``gamma_n = n^(1/4)`` by default."""
    if n < 1:
        raise HypothesisError("n must be at least 1")
    gamma = n ** 0.25 if scale is None else scale
    return ShiftMixture(convolution_power(dist, n - 1), zero_bias(dist), gamma)


# cubic bias

def c_bias_coefficient(gamma: float, c: float, printed: bool = False) -> float:
    """Cubic coefficient ``C / gamma^6``; ``printed=True`` gives ``4 C / gamma^6``."""
    return (4 if printed else 1) * c / gamma ** 6


def c_bias_discrete(dist: DiscreteDist, c3: float) -> PiecewiseDensity:
    _check_centred(dist)
    weight = Polynomial([0.0, 1.0, 0.0, c3])
    norm = dist.moments[1] + c3 * dist.moments[3]
    return _biased(dist, weight, norm)


def c_bias_density(dist: Phi4Dist, c3: float | None = None, x=None, printed: bool = False,
                   ) -> GridFunction:
    """Cubic bias of the quartic law sampled on a grid (default ``[-6 gamma, 6 gamma]``).

    The unnormalised density ``E[(H + c3 H^3) 1{H >= x}]`` is even and is
    computed at ``|x|`` from a half-line integral against the density ratio.
    By default it is divided by its total mass ``E[H^2] + c3 E[H^4]``.
    ``printed=True`` uses ``c3 = 4 C / gamma^6`` and the normaliser
    ``gamma^2 + c3 E[H^4]`` instead.
    """
    g, c = dist.gamma, dist.params.c_quartic
    if c3 is None:
        c3 = c_bias_coefficient(g, c, printed)
    xs = np.linspace(-6 * g, 6 * g, 1201) if x is None else np.asarray(x, dtype=float)
    y = np.abs(xs)
    params = dist.params
    u, w = half_line_rule()
    scales = params.decay_length(y)
    s = scales[:, None] * u[None, :]
    pts = y[:, None] + s
    kernel = np.exp(-params.kappa_increment(y[:, None], s)) * w[None, :]
    upper = (pts + c3 * pts ** 3) * kernel
    unnorm = dist.pdf(y) * upper.sum(axis=1) * scales
    m2, m4 = dist.sigma2, moment(dist, 4)
    norm = g * g + c3 * m4 if printed else m2 + c3 * m4
    return GridFunction(xs, unnorm / norm, meta={"c3": c3, "normaliser": norm,
                                                   "printed": printed})
