"""``modstein`` command line interface.

Exit codes: 0 success, 2 hypothesis violation, 3 verification failure,
4 numerical tolerance failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import __version__
from .inequalities import FAMILY_NAMES, all_passed, verify_inequalities
from .errors import (EXIT_HYPOTHESIS, EXIT_OK, EXIT_TOLERANCE, EXIT_VERIFICATION,
                     HypothesisError, ModsteinError)
from .experiments import ExperimentConfig, run_experiment, write_csv, write_json
from .levy import LevyTriplet, exponential_weight, mod_levy_duality_gap
from .penalize import (fourier_duality_gap, hermite_coeffs, laplace_duality_gap,
                       make_penalized_law, phi_quartic, quartic_signed_polynomial,
                       signed_density)
from .phi4 import Phi4Params, make_dist, sample
from .reports import dump_reports
from .stein import operator_norm_report, signed_stein_residual
from .validation import (ensure_parent, load_discrete_law, parse_float_list, parse_grid,
                         parse_int_list)
from .zerobias import DiscreteDist


def _emit(payload, out: str | None) -> None:
    text = json.dumps(payload, indent=2, default=_jsonable) + "\n"
    if out:
        ensure_parent(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"cannot serialise {type(v).__name__}")


def _finite(v: float):
    return v if math.isfinite(v) else str(v)


def _write_rows(path: str, header: list[str], rows) -> None:
    with open(ensure_parent(path), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])


# phi4

def cmd_phi4_eval(args) -> int:
    dist = make_dist(Phi4Params(args.gamma, args.c))
    x = np.asarray(args.x, dtype=float)
    tf = dist.tail_functionals(x)
    payload = {
        "gamma": args.gamma, "c": args.c, "z": dist.z_gamma, "x": x.tolist(),
        "pdf": dist.pdf(x).tolist(), "cdf": dist.cdf(x).tolist(), "tail": dist.tail(x).tolist(),
        "psi": tf.psi.tolist(), "phi_low": tf.phi_low.tolist(), "phi_up": tf.phi_up.tolist(),
    }
    _emit(payload, args.out)
    return EXIT_OK


def cmd_phi4_sample(args) -> int:
    dist = make_dist(Phi4Params(args.gamma, args.c))
    xs = sample(dist, args.n, args.seed)
    _write_rows(args.out, ["x"], ([float(v)] for v in xs))
    return EXIT_OK


# verification

def cmd_verify_inequalities(args) -> int:
    families = [args.lemma] if args.lemma else None
    if args.lemma and args.lemma not in FAMILY_NAMES:
        raise HypothesisError(f"unknown family {args.lemma!r}; known: {', '.join(FAMILY_NAMES)}")
    reports = verify_inequalities(args.gamma_list, args.c_list, families)
    dump_reports(reports, ensure_parent(args.out))
    for r in reports:
        if r.in_hypothesis:
            status = "PASS" if r.passed else "FAIL"
            print(f"{status} {r.name} gamma={r.gamma:g} C={r.c:g} margin={r.worst_margin:.3e}")
    return EXIT_OK if all_passed(reports) else EXIT_VERIFICATION


def cmd_verify_norms(args) -> int:
    reports = []
    for g in args.gamma_list:
        for c in args.c_list:
            if g < 3 * c:
                print(f"SKIP gamma={g:g} C={c:g}: needs gamma >= 3C")
                continue
            reports.extend(operator_norm_report(make_dist(Phi4Params(g, c))))
    dump_reports(reports, ensure_parent(args.out))
    for r in reports:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name} gamma={r.gamma:g} C={r.c:g} "
              f"ratio={r.scaled_worst_margin:.3f}")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFICATION


# duality

def cmd_duality(args) -> int:
    rows = []
    if args.kind in ("gaussian", "fourier"):
        points = args.u_list if args.kind == "gaussian" else args.theta_list
        for c in args.c_list:
            phi = phi_quartic(c)
            for g in args.gamma_list:
                law = make_penalized_law(phi, g)
                for p in points:
                    gap = (laplace_duality_gap(phi, g, p, law=law) if args.kind == "gaussian"
                           else fourier_duality_gap(phi, g, p, law=law))
                    rows.append({"c": c, "gamma": g, "point": p, "gap": gap})
        worst = max((r["gap"] for r in rows), default=0.0)
        ok = worst <= args.tol
    else:
        triplet = LevyTriplet.poisson() if args.kind == "poisson" else LevyTriplet.dickman()
        phi = exponential_weight(args.rate)
        ok = True
        for g in args.gamma_list:
            for x in args.x_list:
                d = mod_levy_duality_gap(phi, triplet, g, x, n=args.paths, seed=args.seed)
                # Monte Carlo gaps are judged against their standard error
                allowed = args.tol if d.exact else max(args.tol, 4 * d.std_error)
                ok &= d.gap <= allowed
                rows.append({"gamma": g, "x": x, "gap": d.gap, "std_error": d.std_error,
                             "lhs": d.lhs, "rhs": d.rhs})
        worst = max((r["gap"] for r in rows), default=0.0)
    _emit({"kind": args.kind, "tolerance": args.tol, "max_gap": worst, "passed": bool(ok),
           "rows": rows}, args.out)
    return EXIT_OK if ok else EXIT_TOLERANCE


# experiments

def cmd_experiment(args) -> int:
    if args.dist == "rademacher":
        summand, name = DiscreteDist.rademacher(), "rademacher"
    else:
        summand, name = load_discrete_law(args.dist), args.dist
    config = ExperimentConfig(summand, tuple(args.n_list), name, args.seed)
    result = run_experiment(config)
    write_csv(result.rows, ensure_parent(args.out))
    if args.json:
        write_json(result, ensure_parent(args.json))
    s = result.summary
    checks = ("kolmogorov_below_cor44", "kolmogorov_below_cor42",
              "smooth_h1_below_thm41", "smooth_h2_below_thm43")
    for k in checks:
        print(f"{'PASS' if s[k] else 'FAIL'} {k}")
    if s["loglog_slope_n_ge_256"] is not None:
        print(f"slope(n>=256) = {s['loglog_slope_n_ge_256']:.4f}")
    return EXIT_OK if all(s[k] for k in checks) else EXIT_VERIFICATION


def cmd_edgeworth(args) -> int:
    coeffs = hermite_coeffs(phi_quartic(args.c), args.gamma, args.k)
    _write_rows(args.out, ["k", "a_k"], ([k, float(a)] for k, a in enumerate(coeffs)))
    return EXIT_OK


def cmd_signed_measure(args) -> int:
    p = quartic_signed_polynomial(args.gamma, args.c)
    grid = parse_grid(args.grid)
    dens = signed_density(p, args.gamma, grid)
    _write_rows(args.out, ["x", "density"], ([float(x), float(y)] for x, y in zip(dens.xs, dens.ys)))
    step = grid[1] - grid[0]
    mass = float(np.sum(dens.ys) * step)
    residual = signed_stein_residual(p, args.gamma)
    print(json.dumps({"mass_on_grid": _finite(mass), "stein_residual": _finite(residual)}))
    return EXIT_OK


# parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="modstein", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    phi4 = sub.add_parser("phi4", help="evaluate or sample the quartic law")
    p4 = phi4.add_subparsers(dest="action", required=True)
    ev = p4.add_parser("eval")
    ev.add_argument("--gamma", type=float, required=True)
    ev.add_argument("--c", type=float, required=True)
    ev.add_argument("--x", type=float, nargs="+", required=True)
    ev.add_argument("--out")
    ev.set_defaults(func=cmd_phi4_eval)
    sm = p4.add_parser("sample")
    sm.add_argument("--gamma", type=float, required=True)
    sm.add_argument("--c", type=float, required=True)
    sm.add_argument("--n", type=int, required=True)
    sm.add_argument("--seed", type=int, default=0)
    sm.add_argument("--out", required=True)
    sm.set_defaults(func=cmd_phi4_sample)

    ver = sub.add_parser("verify", help="check the explicit inequalities")
    vs = ver.add_subparsers(dest="action", required=True)
    for name, func in (("appendix", cmd_verify_inequalities), ("operator-norms", cmd_verify_norms)):
        p = vs.add_parser(name)
        p.add_argument("--gamma-list", type=parse_float_list, default=[1.0, 2.0, 5.0])
        p.add_argument("--c-list", type=parse_float_list, default=[0.1, 1 / 3, 1.0])
        if name == "appendix":
            p.add_argument("--lemma", choices=FAMILY_NAMES)
        p.add_argument("--out", required=True)
        p.set_defaults(func=func)

    du = sub.add_parser("duality", help="duality identities")
    du.add_argument("kind", choices=("gaussian", "fourier", "poisson", "levy"))
    du.add_argument("--gamma-list", type=parse_float_list, default=None)
    du.add_argument("--c-list", type=parse_float_list, default=[0.1, 1 / 3, 1.0])
    du.add_argument("--u-list", type=parse_float_list, default=list(np.linspace(-2, 2, 21)))
    du.add_argument("--theta-list", type=parse_float_list, default=list(np.linspace(-2, 2, 21)))
    du.add_argument("--x-list", type=parse_float_list, default=[0.5, 1.0, 2.0])
    du.add_argument("--rate", type=float, default=1.0)
    du.add_argument("--paths", type=int, default=200_000)
    du.add_argument("--seed", type=int, default=0)
    du.add_argument("--tol", type=float, default=None)
    du.add_argument("--out")
    du.set_defaults(func=cmd_duality)

    ex = sub.add_parser("experiment", help="exact i.i.d. sum experiments")
    es = ex.add_subparsers(dest="action", required=True)
    iid = es.add_parser("iid-sum")
    iid.add_argument("--dist", default="rademacher", help="'rademacher' or an atom,prob CSV file")
    iid.add_argument("--n-list", type=parse_int_list, default=[4, 16, 64, 256, 1024, 4096])
    iid.add_argument("--seed", type=int, default=0)
    iid.add_argument("--out", required=True)
    iid.add_argument("--json")
    iid.set_defaults(func=cmd_experiment)

    ed = sub.add_parser("edgeworth", help="Hermite coefficients of the quartic weight")
    ed.add_argument("--gamma", type=float, required=True)
    ed.add_argument("--c", type=float, required=True)
    ed.add_argument("--k", type=int, default=40)
    ed.add_argument("--out", required=True)
    ed.set_defaults(func=cmd_edgeworth)

    sg = sub.add_parser("signed-measure", help="density of the quartic signed measure")
    sg.add_argument("--gamma", type=float, required=True)
    sg.add_argument("--c", type=float, required=True)
    sg.add_argument("--grid", required=True, help="LO:HI:N")
    sg.add_argument("--out", required=True)
    sg.set_defaults(func=cmd_signed_measure)
    return ap


_DEFAULT_TOL = {"gaussian": 1e-8, "fourier": 1e-7, "poisson": 1e-10, "levy": 1e-3}
_DEFAULT_GAMMAS = {"gaussian": [1.0, 2.0, 5.0], "fourier": [1.0, 2.0, 5.0],
                   "poisson": [3.0, 10.0], "levy": [3.0]}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "duality":
        if args.tol is None:
            args.tol = _DEFAULT_TOL[args.kind]
        if args.gamma_list is None:
            args.gamma_list = _DEFAULT_GAMMAS[args.kind]
    try:
        return args.func(args)
    except ModsteinError as exc:
        print(f"modstein: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code if exc.exit_code in (EXIT_HYPOTHESIS, EXIT_VERIFICATION,
                                                  EXIT_TOLERANCE) else EXIT_HYPOTHESIS
    except (ValueError, OSError) as exc:
        print(f"modstein: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS


if __name__ == "__main__":
    sys.exit(main())
