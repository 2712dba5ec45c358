"""Exact i.i.d. sums against the quartic law: distances and explicit bounds.

For a symmetric unit-variance summand ``X`` with ``E X^4 < 3`` the rescaled
sum ``Z_n = n^(-1/4) (X_1 + ... + X_n)`` is compared with the quartic law of
scale ``gamma_n = n^(1/4)`` and strength ``C = (3 - E X^4) / 6``.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import HypothesisError
from .numerics import gauss_hermite
from .phi4 import Phi4Dist, Phi4Params, make_dist
from .probes import GaussianPolynomial, Probe, sine_bump
from .zerobias import MAX_EXACT_TERMS, DiscreteDist, convolution_power

CSV_FIELDS = ("n", "gamma", "d_kol", "cor42", "cor44", "smooth_h1", "thm41", "smooth_h2", "thm43")


def _is_rademacher(dist: DiscreteDist) -> bool:
    return (dist.atoms.size == 2 and np.array_equal(dist.atoms, [-1.0, 1.0])
            and np.array_equal(dist.probs, [0.5, 0.5]))


def exact_sum_distribution(summand: DiscreteDist, n: int) -> DiscreteDist:
    """Exact law of ``Z_n = n^(-1/4) (X_1 + ... + X_n)``."""
    if not 1 <= n <= MAX_EXACT_TERMS:
        raise HypothesisError(f"n must lie in [1, {MAX_EXACT_TERMS}]")
    gamma = n ** 0.25
    if _is_rademacher(summand):
        k = np.arange(n + 1)
        probs = np.exp(stats.binom.logpmf(k, n, 0.5))
        probs = (probs + probs[::-1]) / 2
        keep = probs > 0
        atoms = (2.0 * k - n)[keep]
        return DiscreteDist(atoms / gamma, probs[keep] / math.fsum(probs[keep]))
    return convolution_power(summand, n).scaled(1 / gamma)


def kolmogorov_distance(discrete: DiscreteDist, continuous_cdf) -> float:
    """``sup_x |P(D <= x) - F(x)|``, attained at an atom or just left of one."""
    fc = np.asarray(continuous_cdf(discrete.atoms), dtype=float)
    right = np.cumsum(discrete.probs)
    left = right - discrete.probs
    return float(max(np.max(np.abs(fc - right)), np.max(np.abs(fc - left))))


# explicit bounds

def fourth_moment_constant(summand: DiscreteDist) -> float:
    m2, m4 = summand.moments[1], summand.moments[3]
    if abs(m2 - 1) > 1e-12:
        raise HypothesisError(f"summand must have unit variance, got {m2!r}")
    c = (3 - m4) / 6
    if not c > 0:
        raise HypothesisError(f"need E X^4 < 3, got {m4!r}")
    return c


def quartic_gaussian_constant(c: float, nodes: int = 200) -> float:
    """``sqrt(2 pi) E[exp(-C G^4 / 4)]`` for a standard normal ``G``."""
    x, w = gauss_hermite(nodes)
    return math.sqrt(2 * math.pi) * float(np.dot(w, np.exp(-c * x ** 4 / 4)))


def sigma_13(summand: DiscreteDist) -> float:
    """``max(E|X|, E|X|^3 / 2)``."""
    return max(summand.expect(np.abs), summand.expect(lambda x: np.abs(x) ** 3) / 2)


@dataclass(frozen=True)
class SummandConstants:
    c: float
    c1: float
    sigma13: float

    @classmethod
    def of(cls, summand: DiscreteDist) -> "SummandConstants":
        c = fourth_moment_constant(summand)
        return cls(c, quartic_gaussian_constant(c), sigma_13(summand))


def smooth_bound_first_order(k: SummandConstants, gamma: float, sup_h: float = 1.0, sup_dh: float = 1.0) -> float:
    """First-order smooth bound: ``4 sqrt(2(1-C)) |h'| / g + 4 |h| (C c1 s13 + 1/g^2) / g^2``."""
    return (4 * math.sqrt(2 * (1 - k.c)) / gamma * sup_dh
            + 4 / gamma ** 2 * sup_h * (k.c * k.c1 * k.sigma13 + 1 / gamma ** 2))


def kolmogorov_bound_first_order(k: SummandConstants, gamma: float) -> float:
    """Leading Kolmogorov term ``4 (1-C)^(1/4) / (sqrt(c1) g)``."""
    return 4 * (1 - k.c) ** 0.25 / math.sqrt(k.c1) / gamma


def smooth_bound_second_order(k: SummandConstants, gamma: float, sup_dh: float = 1.0, sup_d2h: float = 1.0,
                              quartic_constant: float = 35.0) -> float:
    """Second-order smooth bound ``(3 + 2C + q C/g^4)(2 - 3C)/g^2 |h''| + 66 C |h'| / g^3``.

    ``quartic_constant`` is 35 in the stated bound; 12 is what the operator
    estimate itself delivers.
    """
    c = k.c
    return ((3 + 2 * c + quartic_constant * c / gamma ** 4) * (2 - 3 * c) / gamma ** 2 * sup_d2h
            + 66 * c / gamma ** 3 * sup_dh)


def kolmogorov_bound_second_order(k: SummandConstants, gamma: float) -> float:
    """Leading Kolmogorov term ``2 ((3 + 2C)(2 - 3C))^(1/3) / (c1^(2/3) g^(4/3))``.

    The remainder of order ``g^(-8/3)`` has no explicit constant and is not included.
    """
    c = k.c
    return 2 * ((3 + 2 * c) * (2 - 3 * c)) ** (1 / 3) / (k.c1 ** (2 / 3) * gamma ** (4 / 3))


BOUNDS = {
    "thm41": smooth_bound_first_order,
    "cor42": kolmogorov_bound_first_order,
    "thm43": smooth_bound_second_order,
    "cor44": kolmogorov_bound_second_order,
}


def bound_evaluator(summand: DiscreteDist, n: int, which: str, **norms) -> float:
    if which not in BOUNDS:
        raise ValueError(f"which must be one of {sorted(BOUNDS)}")
    if n < 1:
        raise HypothesisError("n must be positive")
    return BOUNDS[which](SummandConstants.of(summand), n ** 0.25, **norms)


# smooth classes

_CLASS_GRID = np.linspace(-40.0, 40.0, 400_001)


def sup_norms(probe: Probe) -> tuple[float, float, float]:
    x = _CLASS_GRID
    return (float(np.max(np.abs(probe.value(x)))), float(np.max(np.abs(probe.d1(x)))),
            float(np.max(np.abs(probe.d2(x)))))


def normalised(probe: Probe, order: int = 2) -> Probe:
    """Scale a probe so that the sup norms of it and its first ``order`` derivatives are at most 1."""
    norms = sup_norms(probe)[: order + 1]
    return probe.scaled(1 / max(norms), name=f"{probe.name}/{max(norms):.6g}")


def check_class(probe: Probe, order: int, slack: float = 1e-12) -> None:
    if not probe.vanishes_at_infinity:
        raise HypothesisError(f"{probe.name}: class members vanish at infinity")
    norms = sup_norms(probe)[: order + 1]
    if max(norms) > 1 + slack:
        raise HypothesisError(f"{probe.name}: sup norms {norms} exceed 1")


def smooth_probes(order: int = 2) -> list[Probe]:
    bump = GaussianPolynomial(np.polynomial.Polynomial([1.0])).to_probe("exp(-x^2/2)")
    odd = GaussianPolynomial(np.polynomial.Polynomial([0.0, 1.0])).to_probe("x*exp(-x^2/2)")
    return [normalised(p, order) for p in (bump, odd, sine_bump())]


def smooth_class_distance(z: DiscreteDist, h_dist: Phi4Dist, order: int,
                          probes: list[Probe] | None = None) -> float:
    """Largest ``|E h(Z) - E h(H)|`` over the probes: a lower bound on the class distance."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    probes = smooth_probes(order) if probes is None else probes
    best = 0.0
    for p in probes:
        check_class(p, order)
        gap = abs(z.expect(p.value) - h_dist.expect(p.value, p.growth_degree, p.growth_bound))
        best = max(best, gap)
    return best


def correction_term(h_dist: Phi4Dist, h, nodes: int = 200) -> float:
    """``E h(G) - E h(H / gamma)`` for a standard normal ``G``."""
    x, w = gauss_hermite(nodes)
    g = h_dist.gamma
    return float(np.dot(w, h(x))) - h_dist.expect(lambda t: h(t / g))


# pipeline

@dataclass(frozen=True)
class ExperimentConfig:
    summand: DiscreteDist
    n_list: tuple[int, ...]
    summand_name: str = "rademacher"
    seed: int = 0
    csv_path: str | None = None
    json_path: str | None = None
    workers: int | None = None

    def __post_init__(self):
        if any(int(n) != n or n < 1 for n in self.n_list):
            raise HypothesisError("every n must be a positive integer")
        fourth_moment_constant(self.summand)


@dataclass(frozen=True)
class DistanceRow:
    n: int
    gamma: float
    d_kol: float
    cor42: float
    cor44: float
    smooth_h1: float
    thm41: float
    smooth_h2: float
    thm43: float


@dataclass(frozen=True)
class ExperimentResult:
    rows: list[DistanceRow]
    constants: SummandConstants
    summary: dict = field(default_factory=dict)


def distance_row(summand: DiscreteDist, n: int, k: SummandConstants | None = None) -> DistanceRow:
    k = SummandConstants.of(summand) if k is None else k
    gamma = n ** 0.25
    z = exact_sum_distribution(summand, n)
    h = make_dist(Phi4Params(gamma, k.c))
    return DistanceRow(
        n, gamma, kolmogorov_distance(z, h.cdf), kolmogorov_bound_first_order(k, gamma), kolmogorov_bound_second_order(k, gamma),
        smooth_class_distance(z, h, 1), smooth_bound_first_order(k, gamma),
        smooth_class_distance(z, h, 2), smooth_bound_second_order(k, gamma))


def loglog_slope(rows: list[DistanceRow], n_min: int = 256) -> float | None:
    pts = [(math.log(r.n), math.log(r.d_kol)) for r in rows if r.n >= n_min and r.d_kol > 0]
    if len(pts) < 2:
        return None
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    k = SummandConstants.of(config.summand)
    # rows are independent; numpy releases the GIL in the heavy parts
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        rows = list(pool.map(lambda n: distance_row(config.summand, int(n), k), config.n_list))
    rows.sort(key=lambda r: r.n)
    summary = {
        "summand": config.summand_name,
        "c": k.c, "c1": k.c1, "sigma13": k.sigma13,
        "kolmogorov_below_cor44": all(r.d_kol <= r.cor44 for r in rows),
        "kolmogorov_below_cor42": all(r.d_kol <= r.cor42 for r in rows if r.n >= 16),
        "smooth_h1_below_thm41": all(r.smooth_h1 <= r.thm41 for r in rows),
        "smooth_h2_below_thm43": all(r.smooth_h2 <= r.thm43 for r in rows),
        "loglog_slope_n_ge_256": loglog_slope(rows),
        "smooth_distances": "class distance lower bound (finite probe family)",
    }
    result = ExperimentResult(rows, k, summary)
    if config.csv_path:
        write_csv(rows, config.csv_path)
    if config.json_path:
        write_json(result, config.json_path)
    return result


def write_csv(rows: list[DistanceRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for r in rows:
            writer.writerow([str(r.n)] + [f"{getattr(r, f):.17g}" for f in CSV_FIELDS[1:]])


def read_csv(path) -> list[DistanceRow]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_FIELDS:
            raise ValueError(f"unexpected header {reader.fieldnames}")
        return [DistanceRow(int(row["n"]), *(float(row[f]) for f in CSV_FIELDS[1:]))
                for row in reader]


def write_json(result: ExperimentResult, path) -> None:
    payload = {"rows": [asdict(r) for r in result.rows],
               "constants": asdict(result.constants), "summary": result.summary}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8", newline="\n")
