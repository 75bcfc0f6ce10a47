"""Command-line front end.

Subcommands: build, hyperbolicity, measure, equidistribute, axioms, modulus,
homnorm, export-graph.  Exit codes: 0 success, 2 validation error, 3
budget/convergence error.  Reports go to --out or stdout.
"""

from __future__ import annotations

import argparse
import math
import sys
from fractions import Fraction

from .dynsys.loader import load_system
from .dynsys.types import BudgetError, SystemError
from .gamma import build_graph, export_graph, sphere_degree_sum, sphere_size
from .hypmetric import MetricParams, hyperbolicity_delta, shadow, shadow_diameter
from .reportio import report_writer
from . import measure as measure_mod
from . import cxccheck
from . import combmod
from . import homnorm as homnorm_mod


class ValidationFailure(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cxc", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, system=True):
        if system:
            p.add_argument("--system", required=True,
                           help="builtin descriptor or JSON system file")
            p.add_argument("--depth", type=int, default=6)
            p.add_argument("--budget-vertices", type=int, default=2_000_000)
        p.add_argument("--epsilon", type=float, default=0.25)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--tol", type=float, default=1e-6)
        p.add_argument("--dry-run", action="store_true",
                       help="validate inputs without computing")

    common(sub.add_parser("build", help="build the graph and report its shape"))
    p = sub.add_parser("hyperbolicity", help="Gromov products and delta")
    common(p)
    p.add_argument("--mode", choices=("exhaustive", "sampled"), default="exhaustive")
    p.add_argument("--count", type=int, default=20000)
    common(sub.add_parser("measure", help="canonical measure, shadow lemma, entropy"))
    p = sub.add_parser("equidistribute", help="preimage and periodic-point measures")
    common(p)
    p.add_argument("--iterate", type=int, default=4)
    common(sub.add_parser("axioms", help="expansion/irreducibility/degree verdicts"))
    p = sub.add_parser("modulus", help="combinatorial modulus of an annulus problem")
    common(p, system=False)
    p.add_argument("--problem", required=True, help="JSON problem file")
    p.add_argument("--family", choices=("t", "s", "transversal", "separating"),
                   default="t")
    p = sub.add_parser("homnorm", help="homogeneous norm diagnostics for a matrix")
    common(p, system=False)
    p.add_argument("--matrix", required=True,
                   help="rows separated by ';', entries by ',' e.g. '3,0;0,4'")
    p.add_argument("--samples", type=int, default=10000)
    p = sub.add_parser("export-graph", help="vertex/edge dump")
    common(p)
    return ap


def _parse_matrix(text: str):
    rows = [[float(x) for x in row.split(",")] for row in text.split(";")]
    width = {len(r) for r in rows}
    if len(width) != 1 or len(rows) != width.pop():
        raise ValidationFailure("matrix must be square")
    return rows


def _build(args):
    spec = load_system(args.system)
    if args.depth < 1:
        raise ValidationFailure("depth must be >= 1")
    if args.epsilon <= 0:
        raise ValidationFailure("epsilon must be positive")
    g = build_graph(spec, args.depth, budget_vertices=args.budget_vertices)
    return spec, g, MetricParams(args.epsilon, args.depth)


def cmd_build(args):
    if args.dry_run:
        load_system(args.system)
        return {"dry_run": True, "system": args.system}
    spec, g, p = _build(args)
    return {
        "system": spec.name,
        "degree": spec.degree,
        "depth": g.depth,
        "sphere_sizes": [sphere_size(g, n) for n in range(g.depth + 1)],
        "sphere_degree_sums": [sphere_degree_sum(g, n) for n in range(1, g.depth + 1)],
        "edges": sum(len(a) for a in g.adjacency) // 2,
    }


def cmd_hyperbolicity(args):
    if args.dry_run:
        load_system(args.system)
        return {"dry_run": True}
    if args.mode == "sampled" and args.seed is None:
        raise ValidationFailure("sampled mode requires --seed")
    spec, g, p = _build(args)
    delta = hyperbolicity_delta(g, p, mode=args.mode,
                                seed=args.seed or 0, count=args.count)
    return {"system": spec.name, "depth": g.depth, "epsilon": p.epsilon,
            "mode": args.mode, "delta": delta}


def cmd_measure(args):
    if args.dry_run:
        load_system(args.system)
        return {"dry_run": True}
    spec, g, p = _build(args)
    report = {"system": spec.name, "depth": g.depth, "epsilon": p.epsilon}
    s = math.log(spec.degree) + 0.5
    P = measure_mod.poincare_series(g, s)
    mu, tail = measure_mod.mu_s(g, s)
    report["poincare"] = {"s": s, "value": P}
    report["mu_s"] = {"s": s, "atom_mass": float(mu.total_mass()), "tail": tail}
    ratios = measure_mod.shadow_lemma_ratios(g, p)
    report["shadow_lemma"] = {k: ratios[k] for k in
                              ("alpha", "N", "min_ratio", "max_ratio", "count")}
    er = measure_mod.entropy_report(g, p)
    report["entropy"] = {
        "v_estimate": er.v_estimate,
        "lower_bound": er.lower_bound,
        "upper": er.upper,
        "alpha": er.alpha,
        "dimension_bounds": list(er.dimension_bounds),
        "sphere_sizes": er.sphere_sizes,
    }
    return report


def cmd_equidistribute(args):
    if args.dry_run:
        load_system(args.system)
        return {"dry_run": True}
    spec, g, p = _build(args)
    xi = g.spheres[1][0]
    n = min(args.iterate, g.depth - 1)
    mu_n = measure_mod.preimage_measure(g, xi, n)
    proxy = measure_mod.mu_f_proxy(g)
    level = min(3, g.depth - 1)
    sup = 0.0
    for w in g.spheres[level]:
        sh = shadow(g, w)
        sup = max(sup, abs(float(mu_n.mass_on(sh.at_level(1 + n))
                                 - proxy.mass_on(sh.at_level(g.depth)))))
    report = {"system": spec.name, "iterate": n,
              "preimage_vs_slice_sup": sup, "comparison_level": level}
    try:
        mhat = measure_mod.periodic_measure(g, n)
        report["periodic_mass"] = mhat.total_mass()
    except SystemError as e:
        report["periodic_mass"] = f"unsupported: {e}"
    return report


def cmd_axioms(args):
    if args.dry_run:
        load_system(args.system)
        return {"dry_run": True}
    spec, g, p = _build(args)
    report = cxccheck.axiom_report(spec, g, p)
    report["system"] = spec.name
    return report


def cmd_modulus(args):
    problem = combmod.load_problem(args.problem)
    if args.dry_run:
        return {"dry_run": True, "shingles": len(problem.shingling.ids)}
    value, weight, chains = combmod.modulus(problem, args.family, args.tol)
    family = "transversal" if args.family in ("t", "transversal") else "separating"
    report = {
        "family": family,
        "modulus": value,
        "rho": {k: v for k, v in sorted(weight.rho.items())},
        "active_chains": [sorted(c) for c in chains],
    }
    if family == "transversal":
        report["mod_sup"] = 1.0 / value
    else:
        report["mod_inf"] = value
    return report


def cmd_homnorm(args):
    mat = _parse_matrix(args.matrix)
    if args.dry_run:
        return {"dry_run": True, "dimension": len(mat)}
    import numpy as np

    norm = homnorm_mod.build_norm(mat)
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    worst = 0.0
    for _ in range(args.samples):
        v = rng.standard_normal(norm.map.dimension)
        t = rng.uniform(-3, 3)
        lhs = norm.value(norm.flow(t) @ v)
        rhs = math.exp(t) * norm.value(v)
        worst = max(worst, abs(lhs - rhs) / rhs)
    q = homnorm_mod.quasi_triangle_Q(norm, resolution=12, refinements=1)
    return {
        "matrix": mat,
        "eigenvalues": sorted(float(abs(w)) for w in norm.map.eigenvalues),
        "spectral_factor": norm.spectral_factor,
        "homothety_worst_rel_err": worst,
        "samples": args.samples,
        "Q": q["Q"],
        "Q_trend": q["trend"],
        "conformal_dimension_hint": float(
            sum(np.log(np.abs(norm.map.eigenvalues)))
            / min(np.log(np.abs(norm.map.eigenvalues)))),
    }


def cmd_export_graph(args):
    if args.dry_run:
        load_system(args.system)
        return {"dry_run": True}
    spec, g, p = _build(args)
    if args.format == "csv":
        return export_graph(g, "csv")
    return export_graph(g, "json")


_COMMANDS = {
    "build": cmd_build,
    "hyperbolicity": cmd_hyperbolicity,
    "measure": cmd_measure,
    "equidistribute": cmd_equidistribute,
    "axioms": cmd_axioms,
    "modulus": cmd_modulus,
    "homnorm": cmd_homnorm,
    "export-graph": cmd_export_graph,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        report = _COMMANDS[args.command](args)
    except (ValidationFailure, SystemError, combmod.ModulusError,
            homnorm_mod.NormError, ValueError) as e:
        if isinstance(e, (combmod.NoChainError, BudgetError)):
            print(f"error: {e}", file=sys.stderr)
            return 3
        print(f"error: {e}", file=sys.stderr)
        return 2
    except BudgetError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    if isinstance(report, str):  # pre-rendered (csv graph dump)
        if args.out:
            from pathlib import Path

            Path(args.out).write_text(report)
        else:
            sys.stdout.write(report)
        return 0
    if args.format == "csv":
        if "sphere_sizes" in report:
            report = {"rows": [{"n": n, "size": s}
                               for n, s in enumerate(report["sphere_sizes"])]}
        elif "rows" not in report:
            print("error: this report has no tabular form; use --format json",
                  file=sys.stderr)
            return 2
        text = report_writer(report, "csv", args.out)
    else:
        text = report_writer(report, "json", args.out)
    if not args.out:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
