"""Stein operator of the quartic law, its inverse and the associated estimates.

The operator is ``L g = g' - rho g``. For a centred test function ``h_c`` the
solution of ``L g = h_c`` vanishing at infinity is

    g(x) = E[h_c(H) 1{H <= x}] / f(x) = -E[h_c(H) 1{H > x}] / f(x).

It is evaluated as a half-line integral against ``exp(-(kappa(x +- s) -
kappa(x)))`` on whichever side moves away from the origin, which never
divides by a small density. ``g'`` is a second half-line integral of the
same kind, which avoids the cancellation in ``h_c + rho g`` far out; the
higher derivatives then follow from the equation: ``g'' = h_c' + rho' g +
rho g'`` and so on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial, legendre

from .inequalities import inequality_grid
from .errors import HypothesisError
from .numerics import half_line_rule
from .penalize import PenalizingFunction, signed_density
from .phi4 import Phi4Dist, Phi4Params, tail_integrals
from .probes import GaussianPolynomial, Probe, operator_norm_probes
from .reports import VerificationReport

Fn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SteinCoefficients:
    """``rho = kappa'`` and its derivatives for a penalized Gaussian law."""

    gamma: float
    rho: Fn
    rho_prime: Fn
    rho_second: Fn
    kappa: Fn
    params: Phi4Params | None = None

    @classmethod
    def from_params(cls, params: Phi4Params) -> "SteinCoefficients":
        return cls(params.gamma, params.rho, params.rho_prime, params.rho_second,
                   params.kappa, params)

    @classmethod
    def from_penalty(cls, phi: PenalizingFunction, gamma: float,
                     step: float = 1e-3) -> "SteinCoefficients":
        """Coefficients for the density ``phi(x/gamma^2) exp(-x^2/(2 gamma^2))``.

        ``rho(x) = x/gamma^2 - psi'(x/gamma^2)/gamma^2``; its derivatives are
        exact for the quartic and constant weights and otherwise come from
        five-point differences of ``psi'``.
        """
        g2 = gamma * gamma
        c = phi.params.get("c_quartic")
        if c is not None:
            return cls.from_params(Phi4Params(gamma, c))
        if phi.name == "one":
            return cls.from_params(Phi4Params.gaussian(gamma))

        def rho(x):
            x = np.asarray(x, dtype=float)
            return x / g2 - phi.dlog_eval(x / g2) / g2

        def diff(fn):
            def d(x):
                x = np.asarray(x, dtype=float)
                return (fn(x - 2 * step) - 8 * fn(x - step) + 8 * fn(x + step)
                        - fn(x + 2 * step)) / (12 * step)
            return d

        def kappa(x):
            x = np.asarray(x, dtype=float)
            return x * x / (2 * g2) - phi.log_eval(x / g2)

        rp = diff(rho)
        return cls(gamma, rho, rp, diff(rp), kappa)


def apply_operator(coeffs: SteinCoefficients, h: Fn, h_prime: Fn, x):
    """``h'(x) - rho(x) h(x)``."""
    x = np.asarray(x, dtype=float)
    return h_prime(x) - coeffs.rho(x) * h(x)


def _rho_increment(params: Phi4Params, y, s):
    """``rho(y + s) - rho(y)`` without cancellation."""
    return s * (params.a + params.b * (3 * y * y + 3 * y * s + s * s))


def _solve(params: Phi4Params, hc: Fn, dhc: Fn | None, x, chunk: int = 256):
    """Values of ``g`` (and ``g'`` when ``dhc`` is given) for centred ``hc``."""
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    y = np.abs(flat)
    scales = params.decay_length(y)
    u, w = half_line_rule()
    g = np.empty(flat.size)
    dg = np.empty(flat.size) if dhc is not None else None
    for start in range(0, flat.size, chunk):
        sl = slice(start, start + chunk)
        sc = scales[sl][:, None]
        s = sc * u[None, :]
        yy = y[sl][:, None]
        pos = flat[sl][:, None] > 0
        weight = np.exp(-params.kappa_increment(yy, s)) * w[None, :]
        # x > 0 integrates over (x, inf) with a minus sign, x <= 0 over (-inf, x)
        sign = np.where(pos, -1.0, 1.0)
        pts = np.where(pos, flat[sl][:, None] + s, flat[sl][:, None] - s)
        hv = hc(pts)
        g[sl] = (sign * hv * weight).sum(axis=1) * scales[sl]
        if dg is not None:
            # d/dx of the kernel is -/+ (rho(|x| + s) - rho(|x|)) times itself
            delta = _rho_increment(params, yy, s)
            kernel = dhc(pts) + np.where(pos, -1.0, 1.0) * hv * delta
            dg[sl] = (sign * kernel * weight).sum(axis=1) * scales[sl]
    g = g.reshape(x.shape)
    return (g, dg.reshape(x.shape)) if dg is not None else g


def _check_match(coeffs: SteinCoefficients, dist: Phi4Dist) -> Phi4Params:
    if coeffs.params is None or coeffs.params != dist.params:
        raise HypothesisError("Stein coefficients and distribution describe different laws")
    return dist.params


def _as_callable(h) -> Fn:
    return h.value if isinstance(h, Probe) else h


def pseudo_inverse(coeffs: SteinCoefficients, dist: Phi4Dist, h, x, degree: int = 0,
                   bound: float = 1.0):
    """Solution of ``g' - rho g = h - E h(H)`` vanishing at infinity."""
    params = _check_match(coeffs, dist)
    fn = _as_callable(h)
    if isinstance(h, Probe):
        degree, bound = h.growth_degree, h.growth_bound
    mean = dist.expect(fn, degree, bound)
    return _solve(params, lambda t: fn(t) - mean, None, x)


def centred(dist: Phi4Dist, probe: Probe, kind: str = "plain") -> Probe:
    """``h - E h(H)`` (``kind="plain"``) or ``h - E h(H) - x E h'(H)`` (``"hat"``)."""
    deg, bnd = probe.growth_degree, probe.growth_bound
    mean = dist.expect(probe.value, deg, bnd)
    if kind == "plain":
        return Probe(f"{probe.name}-E", lambda t: probe.value(t) - mean, probe.d1, probe.d2,
                     deg, bnd + abs(mean), False)
    if kind == "hat":
        slope = dist.expect(probe.d1, deg, bnd)
        return Probe(f"{probe.name}-E-xE'", lambda t: probe.value(t) - mean - t * slope,
                     lambda t: probe.d1(t) - slope, probe.d2, max(deg, 1),
                     bnd + abs(mean) + abs(slope), False)
    raise ValueError("kind must be 'plain' or 'hat'")


@dataclass(frozen=True)
class SteinSolution:
    """``g = L^{-1} h_c`` and three derivatives sampled on a grid."""

    grid: np.ndarray
    g: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray
    rhs: np.ndarray
    norms: dict = field(default_factory=dict)


def solve(dist: Phi4Dist, probe: Probe, kind: str = "plain", grid=None) -> SteinSolution:
    """Solve the Stein equation for the centred (or doubly centred) probe."""
    params = dist.params
    hc = centred(dist, probe, kind)
    x = inequality_grid(params.gamma, 20_000) if grid is None else np.asarray(grid, dtype=float)
    g, d1 = _solve(params, hc.value, hc.d1, x)
    rho, rp, rs = params.rho(x), params.rho_prime(x), params.rho_second(x)
    d2 = hc.d1(x) + rp * g + rho * d1
    d3 = hc.d2(x) + rs * g + 2 * rp * d1 + rho * d2
    rhs = hc.value(x)
    norms = {"g": float(np.max(np.abs(g))), "d1": float(np.max(np.abs(d1))),
             "d2": float(np.max(np.abs(d2))), "d3": float(np.max(np.abs(d3))),
             "rhs": float(np.max(np.abs(rhs)))}
    return SteinSolution(x, g, d1, d2, d3, rhs, norms)


def _log_cdf(dist: Phi4Dist, x):
    """``log P(H <= x)`` accurate in both tails."""
    x = np.asarray(x, dtype=float)
    s0 = tail_integrals(dist.params, x)[0]
    near = dist.log_pdf(x) + np.log(s0)
    return np.where(x < 0, near, np.log1p(-np.exp(np.minimum(near, 0.0))))


def indicator_solution(coeffs: SteinCoefficients, dist: Phi4Dist, x0: float, x):
    """Solution for ``h = 1{. <= x0}``: ``F(min(x, x0)) Fbar(max(x, x0)) / f(x)``."""
    _check_match(coeffs, dist)
    x = np.asarray(x, dtype=float)
    lo, hi = np.minimum(x, x0), np.maximum(x, x0)
    log_val = _log_cdf(dist, lo) + _log_cdf(dist, -hi) - dist.log_pdf(x)
    return np.exp(log_val)


def indicator_solution_derivative(coeffs: SteinCoefficients, dist: Phi4Dist, x0: float, x):
    """``h_c + rho g`` for the indicator solution (one-sided at ``x0``)."""
    x = np.asarray(x, dtype=float)
    g = indicator_solution(coeffs, dist, x0, x)
    hc = np.where(x <= x0, 1.0, 0.0) - float(np.exp(_log_cdf(dist, np.array(x0))))
    return hc + coeffs.rho(x) * g


def characterization_residual(coeffs: SteinCoefficients, law, probes: list[Probe]) -> list[float]:
    """``|E[h'(Y) - rho(Y) h(Y)]|`` for each probe.

    ``law`` is either an object with an ``expect`` method (quadrature) or an
    array of samples (Monte Carlo mean).
    """
    out = []
    for p in probes:
        def op(t, p=p):
            return p.d1(t) - coeffs.rho(t) * p.value(t)
        if hasattr(law, "expect"):
            value = law.expect(op, p.growth_degree + 3,
                               p.growth_bound * (2 + coeffs.rho(np.array(1.0))))
        else:
            value = float(np.mean(op(np.asarray(law, dtype=float))))
        out.append(abs(value))
    return out


# integral representations

_GL_NODES, _GL_WEIGHTS = legendre.leggauss(16)


def _panels(edges: np.ndarray):
    lo, hi = edges[:-1], edges[1:]
    half = (hi - lo) / 2
    nodes = ((lo + hi) / 2)[:, None] + half[:, None] * _GL_NODES[None, :]
    return nodes, half[:, None] * _GL_WEIGHTS[None, :]


def _running_integrals(values: np.ndarray, weights: np.ndarray):
    """``int_{-inf}^{e}`` and ``int_{e}^{inf}`` at each panel edge ``e``.

    Each is accumulated from its own far end so that small tails are not lost
    against large partial sums.
    """
    per_panel = (values * weights).sum(axis=1)
    left = np.concatenate([[0.0], np.cumsum(per_panel)])
    right = np.concatenate([np.cumsum(per_panel[::-1])[::-1], [0.0]])
    return left, right


@dataclass(frozen=True)
class RepresentationTables:
    """Distribution functions of the law tabulated at Gauss-Legendre nodes.

    ``x`` must be a subset of the panel edges; ``index`` locates it.
    """

    x: np.ndarray
    index: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    cdf: np.ndarray
    tail: np.ndarray
    phi_low: np.ndarray
    phi_up: np.ndarray


def _cdf_tail_phis(dist: Phi4Dist, t: np.ndarray):
    s0, s1, _ = tail_integrals(dist.params, t)
    f = dist.pdf(t)
    near, near1 = f * s0, f * s1
    neg = t < 0
    cdf = np.where(neg, near, 1 - near)
    tail = np.where(neg, 1 - near, near)
    phi_up = np.where(neg, near1 - t, near1)  # E (H - t)_+
    phi_low = phi_up + t                      # E (t - H)_+
    return cdf, tail, phi_low, phi_up


def representation_tables(dist: Phi4Dist, x_grid=None, panels: int = 1200) -> RepresentationTables:
    g = dist.gamma
    x = np.linspace(-6 * g, 6 * g, 241) if x_grid is None else np.asarray(x_grid, dtype=float)
    reach = max(14 * g, float(np.max(np.abs(x))) + 8 * g)
    edges = np.unique(np.concatenate([np.linspace(-reach, reach, panels + 1), x]))
    nodes, weights = _panels(edges)
    cdf, tail, phi_low, phi_up = _cdf_tail_phis(dist, nodes)
    return RepresentationTables(x, np.searchsorted(edges, x), nodes, weights, cdf, tail,
                                phi_low, phi_up)


VARIANTS = ("h_gamma", "h_hat", "linv_h", "linv_hhat")


def integral_representation_check(dist: Phi4Dist, probe: Probe, variant: str,
                                  x_grid=None, tables: RepresentationTables | None = None) -> float:
    """Largest gap between a direct evaluation and its kernel representation.

    ``h_gamma``: ``h - E h = int_{-inf}^x h' F - int_x^inf h' Fbar``.
    ``h_hat``: ``h - E h - x E h' = x (int^x h'' F - int_x h'' Fbar)
    - (int^x h'' phi + int_x h'' phibar)`` with ``phi(u) = E (u - H)_+`` and
    ``phibar(u) = E (H - u)_+``.
    ``linv_h`` and ``linv_hhat``: the corresponding forms of the Stein solution.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    if not probe.vanishes_at_infinity:
        raise HypothesisError("integral representations need an integrable derivative")
    tb = tables if tables is not None else representation_tables(dist, x_grid)
    x, idx, w = tb.x, tb.index, tb.weights
    F, Fbar, _, _ = _cdf_tail_phis(dist, x)
    f = dist.pdf(x)

    if variant in ("h_gamma", "linv_h"):
        d1 = probe.d1(tb.nodes)
        lo = _running_integrals(d1 * tb.cdf, w)[0][idx]
        hi = _running_integrals(d1 * tb.tail, w)[1][idx]
        if variant == "h_gamma":
            direct = centred(dist, probe).value(x)
            kernel = lo - hi
        else:
            direct = _solve(dist.params, centred(dist, probe).value, None, x)
            kernel = -(Fbar * lo + F * hi) / f
    else:
        d2 = probe.d2(tb.nodes)
        a = (_running_integrals(d2 * tb.cdf, w)[0][idx]
             - _running_integrals(d2 * tb.tail, w)[1][idx])
        low = _running_integrals(d2 * tb.phi_low, w)[0][idx]
        up = _running_integrals(d2 * tb.phi_up, w)[1][idx]
        if variant == "h_hat":
            direct = centred(dist, probe, "hat").value(x)
            kernel = x * a - (low + up)
        else:
            direct = _solve(dist.params, centred(dist, probe, "hat").value, None, x)
            psi = dist.tail_functionals(x).psi
            kernel = -psi / f * a + (Fbar * low - F * up) / f
    return float(np.max(np.abs(direct - kernel)))


# operator norms

def d3_bound_proof(gamma: float, c: float) -> float:
    return 3 + 2 * c + 12 * c / gamma ** 4


def d3_bound_statement(gamma: float, c: float) -> float:
    return 3 + 2 * c + 35 * c / gamma ** 4


NORM_BOUNDS = ("bounded_g", "bounded_dg", "ac_dg", "ac_d2g", "d3_proof", "d3_statement")
_NORM_TOL = 1e-9


def operator_norm_report(dist: Phi4Dist, probes: list[Probe] | None = None,
                         which: str = "all", grid=None) -> list[VerificationReport]:
    """Measured sup norms of the Stein solutions against the explicit bounds.

    One report per bound; ``extra["ratios"]`` holds measured/bound per probe.
    """
    g, c = dist.gamma, dist.params.c_quartic
    if g < 3 * c:
        raise HypothesisError(f"operator-norm bounds need gamma >= 3C (gamma={g}, C={c})")
    probes = operator_norm_probes() if probes is None else probes
    groups = {"bounded": NORM_BOUNDS[:2], "ac": NORM_BOUNDS[2:4], "d3": NORM_BOUNDS[4:],
              "all": NORM_BOUNDS}
    if which not in groups:
        raise ValueError(f"which must be one of {sorted(groups)}")
    names = groups[which]
    x = inequality_grid(g, 20_000) if grid is None else np.asarray(grid, dtype=float)
    rows: dict[str, list[tuple[str, float, float, float]]] = {n: [] for n in names}
    for p in probes:
        sup_h1 = float(np.max(np.abs(p.d1(x))))
        sup_h2 = float(np.max(np.abs(p.d2(x))))
        plain = solve(dist, p, "plain", x)
        hat = solve(dist, p, "hat", x) if any(n.startswith("d3") for n in names) else None
        sup_hc = plain.norms["rhs"]
        measured = {
            "bounded_g": (plain.norms["g"], g * math.sqrt(math.pi / 2) * sup_hc, plain.g),
            "bounded_dg": (plain.norms["d1"], 2 * sup_hc, plain.d1),
            "ac_dg": (plain.norms["d1"], 11 * g * sup_h1, plain.d1),
            "ac_d2g": (plain.norms["d2"], 4 * sup_h1, plain.d2),
        }
        if hat is not None:
            measured["d3_proof"] = (hat.norms["d3"], d3_bound_proof(g, c) * sup_h2, hat.d3)
            measured["d3_statement"] = (hat.norms["d3"], d3_bound_statement(g, c) * sup_h2, hat.d3)
        for n in names:
            value, bound, values = measured[n]
            rows[n].append((p.name, value, bound, float(x[np.argmax(np.abs(values))])))
    out = []
    for n in names:
        margins = [(bound - value, name, value, bound, at) for name, value, bound, at in rows[n]]
        worst = min(margins)
        ratios = {name: (value / bound if bound > 0 else 0.0) for name, value, bound, _ in rows[n]}
        out.append(VerificationReport(
            n, g, c, worst[0], worst[4], max(ratios.values()), int(x.size),
            (float(x.min()), float(x.max())), all(m[0] >= -_NORM_TOL for m in margins),
            True, extra={"ratios": ratios,
                         "measured": {m[1]: m[2] for m in margins},
                         "bound": {m[1]: m[3] for m in margins}}))
    return out


# signed measure

def signed_operator(p: Polynomial, gamma: float, g: GaussianPolynomial, x):
    """``gamma^2 g' - x g - P'(-d/dx) g`` for a Gaussian-polynomial ``g``."""
    x = np.asarray(x, dtype=float)
    out = gamma * gamma * g.derivative(1)(x) - x * g(x)
    dp = p.deriv()
    for k, coef in enumerate(dp.coef):
        if coef != 0:
            out = out - coef * (-1) ** k * g.derivative(k)(x)
    return out


def signed_stein_residual(p: Polynomial, gamma: float, g: GaussianPolynomial | None = None,
                          x_grid=None) -> float:
    """``|int (L g) f_mu|`` for the signed measure with exponent ``P``.

    The default ``g = x exp(-x^2/2)`` is odd; an even ``g`` gives zero by
    symmetry alone.
    """
    p = p if isinstance(p, Polynomial) else Polynomial(p)
    g = GaussianPolynomial(Polynomial([0.0, 1.0])) if g is None else g
    if np.all(g.poly.coef == 0):
        return 0.0
    x = np.linspace(-14 * gamma, 14 * gamma, 4001) if x_grid is None else np.asarray(x_grid)
    dens = signed_density(p, gamma, x)
    return abs(float(np.trapezoid(signed_operator(p, gamma, g, x) * dens.ys, x)))
