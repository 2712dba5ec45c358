"""Deterministic numerical kernels shared by the rest of the package.

Everything here is a pure function of its inputs. Integrands are expected to be
vectorised: they receive a numpy array of abscissae and return an array of the
same shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial import hermite_e, legendre
from scipy import optimize, special

from .errors import BracketError, CutoffError, HypothesisError, ToleranceNotMet

ArrayFn = Callable[[np.ndarray], np.ndarray]

_EPS = np.finfo(float).eps

# Gauss-Kronrod 7/15 pair on [-1, 1] (QUADPACK qk15 table).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

KRONROD_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[:-1][::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[:-1][::-1]])
# Gauss weights aligned with KRONROD_NODES (zero on Kronrod-only nodes).
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[[1, 3, 5]] = _WG[:3]
GAUSS_WEIGHTS[7] = _WG[3]
GAUSS_WEIGHTS[[9, 11, 13]] = _WG[:3][::-1]


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error_estimate: float
    evaluations: int

    def __post_init__(self):
        if not self.abs_error_estimate >= 0:
            raise ValueError("abs_error_estimate must be nonnegative")
        if self.evaluations <= 0:
            raise ValueError("evaluations must be positive")


@dataclass(frozen=True)
class GaussianEnvelope:
    """Bound ``|f(x)| <= amplitude * exp(-(x - mean)^2 / (2 sd^2))`` off the core."""

    mean: float
    sd: float
    amplitude: float

    def tail_mass(self, lo: float, hi: float) -> float:
        upper = special.ndtr(-(hi - self.mean) / self.sd)
        lower = special.ndtr((lo - self.mean) / self.sd)
        return float(self.amplitude * self.sd * math.sqrt(2 * math.pi) * (upper + lower))


@dataclass(frozen=True)
class GridFunction:
    xs: np.ndarray
    ys: np.ndarray
    tail_model: str | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys)
        if xs.ndim != 1 or ys.shape != xs.shape:
            raise ValueError("xs and ys must be 1-D arrays of equal length")
        if xs.size < 2:
            raise ValueError("a grid function needs at least two points")
        if not np.all(np.diff(xs) > 0):
            raise ValueError("xs must be strictly increasing")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    def __call__(self, x):
        return np.interp(x, self.xs, self.ys)

    def integral(self) -> float:
        """Trapezoid integral over the grid."""
        return float(np.trapezoid(self.ys, self.xs))


def _gk15_panels(f: ArrayFn, a: np.ndarray, b: np.ndarray):
    """Kronrod estimate, QUADPACK-style error and |f| mass for each panel."""
    centre = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = centre[:, None] + half[:, None] * KRONROD_NODES[None, :]
    fx = np.asarray(f(x), dtype=float)
    if fx.shape != x.shape:
        fx = np.broadcast_to(fx, x.shape)
    if not np.all(np.isfinite(fx)):
        raise ToleranceNotMet("integrand returned a non-finite value")
    resk = fx @ KRONROD_WEIGHTS
    resg = fx @ GAUSS_WEIGHTS
    resabs = np.abs(fx) @ KRONROD_WEIGHTS
    mean = 0.5 * resk
    resasc = np.abs(fx - mean[:, None]) @ KRONROD_WEIGHTS
    err = np.abs((resk - resg) * half)
    resasc = resasc * np.abs(half)
    resabs = resabs * np.abs(half)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = np.where(
            (resasc != 0) & (err != 0),
            resasc * np.minimum(1.0, (200.0 * err / np.where(resasc == 0, 1, resasc)) ** 1.5),
            err,
        )
    floor = 50.0 * _EPS * resabs
    return resk * half, np.maximum(scaled, floor), floor


def _adaptive(f: ArrayFn, lo: float, hi: float, rel_tol: float, abs_tol: float,
              initial: int, max_panels: int, extra_error: float = 0.0):
    edges = np.linspace(lo, hi, initial + 1)
    a, b = edges[:-1], edges[1:]
    vals, errs, floors = _gk15_panels(f, a, b)
    evaluations = 15 * a.size
    width = hi - lo
    while True:
        total = math.fsum(vals)
        total_err = float(errs.sum()) + extra_error
        tol = max(rel_tol * abs(total), abs_tol)
        if total_err <= tol:
            return total, total_err, evaluations
        share = tol * (b - a) / width
        bad = (errs > share) & (errs > floors * 1.0000001)
        if not np.any(bad) and total_err <= tol + float(floors.sum()) * 1.0000001 + extra_error:
            # every panel is at its roundoff floor: nothing more can be gained
            return total, total_err, evaluations
        if not np.any(bad) or a.size + int(bad.sum()) > max_panels:
            raise ToleranceNotMet(
                f"tolerance not met: error estimate {total_err:.3e} > {tol:.3e}",
                best_estimate=total, error_estimate=total_err)
        mid = 0.5 * (a[bad] + b[bad])
        na = np.concatenate([a[bad], mid])
        nb = np.concatenate([mid, b[bad]])
        nv, ne, nf = _gk15_panels(f, na, nb)
        evaluations += 15 * na.size
        keep = ~bad
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        order = np.argsort(a, kind="stable")
        a, b = a[order], b[order]
        vals = np.concatenate([vals[keep], nv])[order]
        errs = np.concatenate([errs[keep], ne])[order]
        floors = np.concatenate([floors[keep], nf])[order]


def integrate_interval(f: ArrayFn, lo: float, hi: float, rel_tol: float = 1e-12,
                       abs_tol: float = 1e-300, initial: int = 8,
                       max_panels: int = 50_000) -> QuadratureResult:
    """Adaptive Gauss-Kronrod integral of ``f`` over ``[lo, hi]``."""
    if not hi > lo:
        raise ValueError("need hi > lo")
    value, err, n = _adaptive(f, lo, hi, rel_tol, abs_tol, initial, max_panels)
    return QuadratureResult(value, err, n)


def integrate_line(f: ArrayFn, rel_tol: float = 1e-12,
                   envelope: GaussianEnvelope | None = None,
                   core: tuple[float, float] | None = None,
                   scale: float = 1.0, abs_tol: float = 1e-300,
                   max_panels: int = 50_000) -> QuadratureResult:
    """Integral of ``f`` over the real line.

    With an envelope the integral is taken over a core interval (default twelve
    envelope standard deviations either side of its mean) and the discarded
    tails are bounded by the Gaussian tail of the envelope; that bound is added
    to the error budget. Without one, the line is mapped onto (-1, 1) through
    ``x = scale * t / (1 - t^2)``.
    """
    if envelope is not None:
        if core is None:
            core = (envelope.mean - 12 * envelope.sd, envelope.mean + 12 * envelope.sd)
        lo, hi = core
        tail = envelope.tail_mass(lo, hi)
        value, err, n = _adaptive(f, lo, hi, rel_tol, abs_tol, 16, max_panels, tail)
        return QuadratureResult(value, err, n)

    def mapped(t):
        one = 1.0 - t * t
        x = scale * t / one
        return f(x) * (scale * (1.0 + t * t) / (one * one))

    value, err, n = _adaptive(mapped, -1.0, 1.0, rel_tol, abs_tol, 16, max_panels)
    return QuadratureResult(value, err, n)


@lru_cache(maxsize=1)
def half_line_rule(order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on ``[0, 80]``, graded towards 0."""
    edges = np.concatenate([
        np.arange(0.0, 4.0, 0.5), np.arange(4.0, 16.0, 1.0), np.arange(16.0, 80.0 + 1e-9, 4.0)])
    nodes, weights = legendre.leggauss(order)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    u = ((lo + hi) / 2)[:, None] + half[:, None] * nodes[None, :]
    w = half[:, None] * weights[None, :]
    return u.ravel(), w.ravel()


def half_line_integral(integrand: Callable[[slice, np.ndarray], np.ndarray],
                       scales: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Batch of integrals ``int_0^inf integrand_i(s) ds``.

    ``integrand(sl, s)`` receives a slice into the batch and an array ``s`` of
    shape ``(len(batch[sl]), nodes)``; it must return the integrand values
    (weight included). ``scales[i]`` is the decay length of member ``i``: the
    composite Gauss-Legendre rule covers ``[0, 80 * scale]``, so integrands
    must have decayed by ``exp(-40)`` or more over that range.
    """
    scales = np.asarray(scales, dtype=float)
    u, w = half_line_rule()
    out = np.empty(scales.shape[0])
    for start in range(0, scales.shape[0], chunk):
        sl = slice(start, min(start + chunk, scales.shape[0]))
        sc = scales[sl][:, None]
        vals = integrand(sl, sc * u[None, :])
        out[sl] = (vals * w[None, :]).sum(axis=1) * scales[sl]
    return out


def gauss_hermite(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for expectations against the standard normal law."""
    if not 1 <= n <= 512:
        raise HypothesisError("gauss_hermite needs 1 <= n <= 512")
    nodes, weights = special.roots_hermitenorm(n)
    return nodes, weights / weights.sum()


def hermite_He(k: int, x):
    """Probabilists' Hermite polynomial ``He_k`` evaluated at ``x``."""
    if k < 0:
        raise ValueError("degree must be nonnegative")
    coef = np.zeros(k + 1)
    coef[k] = 1.0
    return hermite_e.hermeval(x, coef)


def invert_monotone(f: Callable[[float], float], target: float,
                    bracket: tuple[float, float], tol: float = 1e-12) -> float:
    """Solve ``f(x) = target`` for strictly monotone ``f`` on ``bracket``."""
    lo, hi = bracket
    flo, fhi = f(lo) - target, f(hi) - target
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise BracketError(
            f"target {target!r} is not bracketed by f({lo!r}), f({hi!r})")
    x = optimize.brentq(lambda t: f(t) - target, lo, hi, xtol=1e-300, rtol=4 * _EPS,
                        maxiter=500)
    resid = abs(f(x) - target)
    if resid > tol:
        raise ToleranceNotMet(f"residual {resid:.3e} exceeds {tol:.3e}", best_estimate=x,
                              error_estimate=resid)
    return x


def fourier_invert(charfn: Callable[[np.ndarray], np.ndarray], x_grid,
                   xi_cutoff: float, xi_step: float, decay_tol: float = 1e-12,
                   real: bool = True) -> GridFunction:
    """Density ``(1/2pi) int exp(-i xi x) charfn(xi) d xi`` by the trapezoid rule."""
    xs = np.asarray(x_grid, dtype=float)
    edge = np.abs(charfn(np.array([-xi_cutoff, xi_cutoff])))
    if np.max(edge) > decay_tol:
        raise CutoffError(
            f"|charfn| = {np.max(edge):.3e} at the cutoff {xi_cutoff}; widen it",
            best_estimate=None, error_estimate=float(np.max(edge)))
    m = int(round(xi_cutoff / xi_step))
    xi = np.arange(-m, m + 1) * xi_step
    weights = np.full(xi.shape, xi_step)
    weights[[0, -1]] *= 0.5
    phi = np.asarray(charfn(xi), dtype=complex) * weights
    ys = np.empty(xs.shape, dtype=complex)
    step = max(1, 4_000_000 // xi.size)
    for start in range(0, xs.size, step):
        block = xs[start:start + step]
        ys[start:start + step] = np.exp(-1j * np.outer(block, xi)) @ phi
    ys /= 2 * np.pi
    return GridFunction(xs, ys.real if real else ys, tail_model="fourier-trapezoid",
                        meta={"xi_cutoff": xi_cutoff, "xi_step": xi_step})
