"""Pointwise checks of the explicit tail and ratio estimates for the quartic law.

Each family returns, on a grid, the margin that must be nonnegative, both in
absolute units and divided by the density. Margins are built from the scaled
tail integrals, so the scaled margin stays informative even where the density
has underflowed to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import HypothesisError
from .phi4 import Phi4Dist, Phi4Params, make_dist, tail_integrals
from .reports import VerificationReport

MARGIN_TOL = 1e-12
# exp(700) stands in for 1/pdf once the density has underflowed; it only
# enters margins whose sign is already decided by that huge term.
_LOG_CAP = 700.0

SQRT15_THRESHOLD = 2 * (math.sqrt(15) / 3 - 1)


def inequality_grid(gamma: float, size: int = 10_000) -> np.ndarray:
    """Linear grid on ``[-10 gamma, 10 gamma]`` refined near 0 and near ``+-gamma``."""
    n_log = size // 10
    n_lin = size - 4 * n_log
    lin = np.linspace(-10 * gamma, 10 * gamma, n_lin)
    near0 = gamma * np.logspace(-6, 0, n_log, endpoint=False)
    near1 = gamma * np.logspace(-6, -1, n_log // 2)
    pts = np.concatenate([
        lin, near0, -near0, gamma + near1, gamma - near1, -gamma + near1, -gamma - near1])
    return np.unique(pts)


def _inv_pdf(dist: Phi4Dist, x):
    return np.exp(np.minimum(-dist.log_pdf(x), _LOG_CAP))


def _cdf_and_tail(dist: Phi4Dist, x, s0):
    near = dist.pdf(x) * s0
    far = 1.0 - near
    return np.where(x < 0, near, far), np.where(x < 0, far, near)


@dataclass(frozen=True)
class FamilyValues:
    x: np.ndarray
    scaled: np.ndarray  # margin divided by the density (raw for dimensionless families)
    absolute: np.ndarray


@dataclass(frozen=True)
class InequalityFamily:
    name: str
    description: str
    hypothesis: Callable[[float, float], bool]
    hypothesis_text: str
    evaluate: Callable[[Phi4Dist, np.ndarray], FamilyValues]
    exclude_zero: bool = False
    half_line: str | None = None  # "pos", "neg" or None for the whole line


def _always(gamma, c):
    return True


def _mills_tail_upper(dist, x):
    # x > 0: tail <= pdf / rho
    y = x[x > 0]
    s0 = tail_integrals(dist.params, y)[0]
    m = 1 / dist.params.rho(y) - s0
    return FamilyValues(y, m, m * dist.pdf(y))


def _mills_tail_lower(dist, x):
    # x < 0: cdf <= pdf / rho(|x|)
    y = x[x < 0]
    s0 = tail_integrals(dist.params, y)[0]
    m = 1 / dist.params.rho(np.abs(y)) - s0
    return FamilyValues(y, m, m * dist.pdf(y))


def _psi_upper(dist, x):
    # psi <= x pdf / rho = pdf / rho_tilde
    p = dist.params
    y = np.abs(x)
    s0, s1, _ = tail_integrals(p, y)
    m = 1 / p.rho_tilde(x) - (y * s0 + s1)
    return FamilyValues(x, m, m * dist.pdf(x))


def _lower_tail_bounds(dist, x):
    # cdf >= -rho pdf / (rho' + rho^2) and tail >= rho pdf / (rho' + rho^2);
    # both lines are reported as one family, taking the pointwise minimum.
    p = dist.params
    s0 = tail_integrals(p, x)[0]
    near = s0  # ratio of the nearer tail to the density
    far = np.maximum(_inv_pdf(dist, x) - s0, 0.0)
    lower_ratio = np.where(x < 0, near, far)
    upper_ratio = np.where(x < 0, far, near)
    r = p.rho(x)
    k = r / (p.rho_prime(x) + r * r)
    cdf, tail = _cdf_and_tail(dist, x, s0)
    f = dist.pdf(x)
    scaled = np.minimum(lower_ratio + k, upper_ratio - k)
    absolute = np.minimum(cdf + k * f, tail - k * f)
    return FamilyValues(x, scaled, absolute)


def _phi_sum(dist, x):
    # phi_low + phi_up <= 2 pdf / rho_tilde
    p = dist.params
    s1 = tail_integrals(p, x)[1]
    y = np.abs(x)
    f = dist.pdf(x)
    scaled = 2 / p.rho_tilde(x) - 2 * s1 - y * _inv_pdf(dist, x)
    absolute = f * (2 / p.rho_tilde(x) - 2 * s1) - y
    return FamilyValues(x, scaled, absolute)


def _upper_ratio(dist, x, s0):
    return np.where(x >= 0, s0, np.maximum(_inv_pdf(dist, x) - s0, 0.0))


def _shifted_gbar(dist, x):
    # (x + gamma) * (1 - rho * tail / pdf) <= 3 gamma / 2
    p = dist.params
    s0 = tail_integrals(p, x)[0]
    gbar = 1 - p.rho(x) * _upper_ratio(dist, x, s0)
    with np.errstate(over="ignore"):
        m = 1.5 * p.gamma - (x + p.gamma) * gbar
    return FamilyValues(x, m, m)


def _psi_sign(dist, x):
    # sign(psi_odd - pdf * q_hat) = sign(x), with psi_odd(x) = sign(x) psi(|x|)
    p = dist.params
    y = np.abs(x)
    s0, s1, _ = tail_integrals(p, y)
    psi_ratio = y * s0 + s1
    scaled = np.sign(x) * (np.sign(x) * psi_ratio - p.q_hat(x))
    return FamilyValues(x, scaled, scaled * dist.pdf(x))


def _variance_weighted(dist, x):
    # (D - B tail / pdf) V <= 1 + 1.8 C on x >= 0
    p = dist.params
    y = x[x >= 0]
    s0 = tail_integrals(p, y)[0]
    lhs = (p.quadratic_rho_combination(y) - p.cubic_rho_combination(y) * s0) \
        * dist.variance_weight(y)
    m = 1 + 1.8 * p.c_quartic - lhs
    return FamilyValues(y, m, m)


def _derivative_signs(dist, x):
    # sign(cdf + pdf Q) = sign(x) and sign(tail - pdf Q) = -sign(x), Q = D / B
    p = dist.params
    s0 = tail_integrals(p, x)[0]
    q = p.quadratic_rho_combination(x) / p.cubic_rho_combination(x)
    far = np.maximum(_inv_pdf(dist, x) - s0, 0.0)
    lower_ratio = np.where(x < 0, s0, far)
    upper_ratio = np.where(x < 0, far, s0)
    sg = np.sign(x)
    cdf, tail = _cdf_and_tail(dist, x, s0)
    f = dist.pdf(x)
    scaled = np.minimum(sg * (lower_ratio + q), -sg * (upper_ratio - q))
    absolute = np.minimum(sg * (cdf + f * q), -sg * (tail - f * q))
    return FamilyValues(x, scaled, absolute)


def _chi_up(dist, x):
    # chi_up <= pdf / B on x > 0
    p = dist.params
    y = x[x > 0]
    s2 = tail_integrals(p, y)[2]
    m = 1 / p.cubic_rho_combination(y) - s2 / 2
    return FamilyValues(y, m, m * dist.pdf(y))


FAMILIES: dict[str, InequalityFamily] = {f.name: f for f in [
    InequalityFamily("tail_upper", "tail(x) <= pdf(x)/rho(x) for x > 0", _always, "gamma > 0",
                     _mills_tail_upper, half_line="pos"),
    InequalityFamily("cdf_upper", "cdf(x) <= pdf(x)/rho(|x|) for x < 0", _always, "gamma > 0",
                     _mills_tail_lower, half_line="neg"),
    InequalityFamily("psi_upper", "psi(x) <= x pdf(x)/rho(x)", _always, "gamma > 0", _psi_upper),
    InequalityFamily("tail_lower", "cdf >= -rho pdf/(rho'+rho^2), tail >= rho pdf/(rho'+rho^2)",
                     _always, "gamma > 0", _lower_tail_bounds),
    InequalityFamily("phi_sum", "phi_low + phi_up <= 2 pdf/rho_tilde", _always, "gamma > 0",
                     _phi_sum),
    InequalityFamily("shifted_gbar", "(x+gamma)(1 - rho tail/pdf) <= 3 gamma/2", _always,
                     "gamma > 0", _shifted_gbar),
    InequalityFamily("psi_sign", "sign(psi - pdf q_hat) = sign(x), psi extended oddly",
                     lambda g, c: g ** 4 >= SQRT15_THRESHOLD * c,
                     "gamma^4 >= 2C(sqrt(15)/3 - 1)", _psi_sign, exclude_zero=True),
    InequalityFamily("variance_weighted", "(D - B tail/pdf) V <= 1 + 1.8C for x >= 0",
                     lambda g, c: g >= max(1.0, 12 * c), "gamma >= max(1, 12C)",
                     _variance_weighted, half_line="pos"),
    InequalityFamily("derivative_signs", "sign(cdf + pdf D/B) = sign(x), "
                     "sign(tail - pdf D/B) = -sign(x)",
                     lambda g, c: g ** 4 >= 3 * c, "gamma^4 >= 3C", _derivative_signs,
                     exclude_zero=True),
    InequalityFamily("chi_up", "chi_up(x) <= pdf(x)/B(x) for x > 0", lambda g, c: g >= 1,
                     "gamma >= 1", _chi_up, half_line="pos"),
]}

VARIANCE_BRACKET = "variance_bracket"
FAMILY_NAMES = list(FAMILIES) + [VARIANCE_BRACKET]


def in_hypothesis(name: str, gamma: float, c: float) -> bool:
    if name == VARIANCE_BRACKET:
        return True
    return FAMILIES[name].hypothesis(gamma, c)


def verify_variance_bracket(dist: Phi4Dist) -> VerificationReport:
    g, c = dist.params.gamma, dist.params.c_quartic
    ratio = dist.sigma2 / g ** 2
    lower = ratio - (1 - 3.75 * c / g ** 4)
    upper = 1 + 0.75 * c / g ** 4 - ratio
    worst = min(lower, upper)
    return VerificationReport(VARIANCE_BRACKET, g, c, worst, None, worst, 1, None,
                              worst >= -MARGIN_TOL, True,
                              note=f"sigma^2/gamma^2 = {ratio!r}")


def verify_family(name: str, dist: Phi4Dist, grid: np.ndarray | None = None,
                  allow_out_of_hypothesis: bool = False) -> VerificationReport:
    """Worst margin of one family on a grid (default :func:`inequality_grid`)."""
    if name == VARIANCE_BRACKET:
        return verify_variance_bracket(dist)
    if name not in FAMILIES:
        raise KeyError(f"unknown inequality family {name!r}; known: {FAMILY_NAMES}")
    fam = FAMILIES[name]
    g, c = dist.params.gamma, dist.params.c_quartic
    ok = fam.hypothesis(g, c)
    if not ok and not allow_out_of_hypothesis:
        raise HypothesisError(f"{name} requires {fam.hypothesis_text}; got gamma={g}, C={c}")
    xs = inequality_grid(g) if grid is None else np.asarray(grid, dtype=float)
    if fam.exclude_zero:
        xs = xs[xs != 0]
    vals = fam.evaluate(dist, xs)
    absolute = vals.absolute
    if np.any(np.isnan(absolute)) or np.any(np.isnan(vals.scaled)):
        raise FloatingPointError(f"{name}: NaN margin at gamma={g}, C={c}")
    i = int(np.argmin(absolute))
    worst = float(absolute[i])
    note = fam.description if ok else f"outside hypothesis ({fam.hypothesis_text}); informational"
    return VerificationReport(
        name, g, c, worst, float(vals.x[i]), float(np.min(vals.scaled)), int(vals.x.size),
        (float(vals.x.min()), float(vals.x.max())),
        bool(worst >= -MARGIN_TOL) if ok else None, ok, note=note)


def verify_inequalities(gammas, cs, families: list[str] | None = None,
                    include_out_of_hypothesis: bool = False) -> list[VerificationReport]:
    """Run the selected families over a parameter lattice.

    Out-of-hypothesis points are listed with ``in_hypothesis=False``; their
    numbers are only filled in when ``include_out_of_hypothesis`` is set.
    """
    names = FAMILY_NAMES if families is None else families
    for n in names:
        if n not in FAMILY_NAMES:
            raise KeyError(f"unknown inequality family {n!r}; known: {FAMILY_NAMES}")
    out = []
    for g in gammas:
        for c in cs:
            dist = make_dist(Phi4Params(g, c))
            grid = inequality_grid(g)
            for n in names:
                if in_hypothesis(n, g, c) or include_out_of_hypothesis:
                    out.append(verify_family(n, dist, grid, allow_out_of_hypothesis=True))
                else:
                    fam = FAMILIES[n]
                    out.append(VerificationReport(
                        n, g, c, None, None, None, 0, None, None, False,
                        note=f"skipped: requires {fam.hypothesis_text}"))
    return out


def all_passed(reports: list[VerificationReport]) -> bool:
    return all(r.passed for r in reports if r.in_hypothesis)
