"""Command-line interface: solve, compare, gen, cuts.

Flag values override ``SPLITBRANCH_*`` environment variables, which override
built-in defaults.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import _kernels
from .bench import (
    build_tables,
    ratio_table,
    run_experiment,
)
from .bnb import solve
from .branching import RULES
from .config import Settings
from .cutgen import generate_gmi_cuts, select_cuts, weak_gmi_from_row, to_structural_space, efficacy
from .errors import CutRejected, ZeroNorm
from .io import InstanceManifest, generate_instance, parse_mps, write_mps
from .model import standardize
from .simplex import LpWorkspace, fractional_basics, solve_ws, tableau_row


def _parse_seeds(spec: str) -> list[int]:
    if ".." in spec:
        lo, hi = spec.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in spec.split(",") if s]


def _common_settings(args) -> dict:
    keys = ("time_limit", "node_limit", "gmi_weight", "root_cut_rounds")
    return {k: getattr(args, k, None) for k in keys}


def _cmd_solve(args) -> int:
    p = parse_mps(Path(args.file).read_text())
    settings = Settings.from_env(**_common_settings(args))
    settings.seed = args.seed
    if args.provide_solution is not None:
        settings.provided_solution = args.provide_solution
    sol, stats = solve(p, args.rule, settings)
    print(f"instance      {p.name}")
    print(f"rule          {args.rule} (seed {args.seed})")
    print(f"status        {stats.status} / {sol.status}")
    print(f"objective     {sol.objective!r}")
    print(f"bound         {stats.bound!r}")
    print(f"nodes         {stats.nodes}")
    print(f"cuts added    {stats.cuts_added}")
    print(f"time          {stats.total_time:.3f}s "
          f"(branching {stats.branch_time:.3f}s)")
    if sol.values is not None:
        print("solution      " + " ".join(f"{v:g}" for v in sol.values))
    return 0 if stats.status == "optimal" else 1


def _cmd_compare(args) -> int:
    manifest = InstanceManifest.read(args.manifest)
    rules = [r for r in args.rules.split(",") if r]
    for r in rules:
        if r not in RULES:
            raise SystemExit(f"unknown rule {r!r}; choose from {RULES}")
    seeds = _parse_seeds(args.seeds)
    records = run_experiment(
        manifest, rules, seeds, args.out,
        settings_kwargs=_common_settings(args),
        provided_solutions=args.provided_solutions,
        jobs=args.jobs,
        progress=(lambda rec: print(
            f"  done {rec.instance} {rec.rule} seed {rec.seed}: "
            f"{rec.status} nodes={rec.nodes}", file=sys.stderr))
        if args.verbose else None,
    )
    for tbl in build_tables(records, rules, seeds):
        print()
        print(tbl.to_markdown())
    if len(rules) >= 2:
        base = rules[0]
        for other in rules[1:]:
            info = ratio_table(records, base, other, seeds)
            print()
            print(f"{other} vs {base}: affected {info['affected']}/"
                  f"{info['compared']} pairs, root decision differs on "
                  f"{info['root_differs']}")
            if "ratio_nodes" in info:
                print(f"  sgm ratios ({other}/{base}): "
                      f"nodes {info['ratio_nodes']:.3f}, "
                      f"time {info['ratio_time_s']:.3f}; "
                      f"wilcoxon nodes p={info['wilcoxon_nodes_p']:.4f}")
    if len(rules) == 2:
        _write_improvements(records, rules, seeds, Path(args.out).with_suffix(".impr.csv"))
    print(f"\nrecords written to {args.out}")
    return 0


def _write_improvements(records, rules, seeds, path: Path):
    """Per-affected-pair relative improvements (bar-plot data)."""
    import csv

    a = {(r.instance, r.seed): r for r in records
         if r.rule == rules[0] and r.status == "optimal" and r.seed in seeds}
    b = {(r.instance, r.seed): r for r in records
         if r.rule == rules[1] and r.status == "optimal" and r.seed in seeds}
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["instance", "seed", "rel_nodes", "rel_time"])
        for key in sorted(set(a) & set(b)):
            ra, rb = a[key], b[key]
            if ra.nodes == rb.nodes:
                continue
            rel_n = (ra.nodes - rb.nodes) / max(ra.nodes, 1)
            rel_t = (ra.time_s - rb.time_s) / max(ra.time_s, 1e-9)
            w.writerow([key[0], key[1], f"{rel_n:.4f}", f"{rel_t:.4f}"])


def _cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params = {}
    if args.n is not None:
        params["n"] = args.n
    if args.family == "setcover":
        params = {}
        if args.rows is not None:
            params["rows"] = args.rows
        if args.n is not None:
            params["cols"] = args.n
    entries = []
    for k in range(args.count):
        seed = args.seed + k
        p = generate_instance(args.family, seed, **params)
        path = out / f"{p.name}.mps"
        path.write_text(write_mps(p))
        opt = None
        if args.with_optima:
            sol, stats = solve(p, "pseudocost", Settings.from_env(seed=1))
            if stats.status == "optimal":
                opt = sol.objective
        entries.append((str(path), opt))
        print(f"wrote {path}")
    manifest = InstanceManifest(tuple(entries))
    manifest.write(out / "manifest.txt")
    print(f"wrote {out / 'manifest.txt'}")
    return 0


def _cmd_cuts(args) -> int:
    import csv

    p = parse_mps(Path(args.file).read_text())
    settings = Settings.from_env()
    settings.root_cut_rounds = args.rounds
    sf = standardize(p)
    ws = LpWorkspace(sf, (), settings)
    lb, ub = ws.base_bounds()
    res = solve_ws(ws, lb, ub, settings)
    rows_out = []
    cuts = []
    for _round in range(args.rounds):
        if res.status != "optimal":
            break
        raws = generate_gmi_cuts(sf, res, settings)
        for j, _f in fractional_basics(res, sf, settings.int_tol):
            try:
                row = tableau_row(res, sf.struct_col_of(j), settings.coef_drop)
                weak_nb = weak_gmi_from_row(row, settings.f0_min,
                                            settings.coef_drop,
                                            settings.max_dynamism)
                weak_std = to_structural_space(weak_nb, sf, res)
                if settings.eff_space == "nonbasic":
                    eff = efficacy(weak_nb, np.zeros(ws.n_work))
                else:
                    eff = efficacy(weak_std, res.x[: sf.n_struct])
                rows_out.append([j, weak_std.kind, eff, weak_std.norm,
                                 weak_std.support])
            except (CutRejected, ZeroNorm):
                pass
        for g in raws:
            rows_out.append([g.gen_var, g.cut_std.kind, g.eff,
                             g.cut_std.norm, g.cut_std.support])
        selected = select_cuts(raws, settings)
        if not selected:
            break
        cuts.extend(g.cut_std for g in selected)
        new_ws = LpWorkspace(sf, cuts, settings)
        start = new_ws.migrate_basis(res.basis, ws)
        lb, ub = new_ws.base_bounds()
        res = solve_ws(new_ws, lb, ub, settings, start=start)
        ws = new_ws
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["generating_var", "kind", "efficacy", "norm", "support"])
        for row in rows_out:
            w.writerow([row[0], row[1], f"{row[2]:.9g}", f"{row[3]:.9g}", row[4]])
    print(f"wrote {len(rows_out)} cut records to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="splitbranch",
        description="Branch-and-cut MILP solver with cut-driven branching "
                    f"(LP kernels: {_kernels.backend_name()})",
    )
    sub = ap.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("solve", help="solve one MPS instance")
    sp.add_argument("file")
    sp.add_argument("--rule", default="pseudocost", choices=RULES)
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--time-limit", type=float, default=None)
    sp.add_argument("--node-limit", type=int, default=None)
    sp.add_argument("--gmi-weight", type=float, default=None)
    sp.add_argument("--root-cut-rounds", type=int, default=None)
    sp.add_argument("--provide-solution", type=float, default=None,
                    help="install this objective value as the root incumbent")
    sp.set_defaults(func=_cmd_solve)

    cp = sub.add_parser("compare", help="run a rule/instance/seed grid")
    cp.add_argument("--manifest", required=True)
    cp.add_argument("--rules", required=True,
                    help="comma-separated rule names")
    cp.add_argument("--seeds", default="1..5",
                    help="e.g. 1..5 or 1,3,5")
    cp.add_argument("--out", required=True, help="records CSV (resumable)")
    cp.add_argument("--provided-solutions", action="store_true",
                    help="install manifest optima as root incumbents")
    cp.add_argument("--time-limit", type=float, default=None)
    cp.add_argument("--node-limit", type=int, default=None)
    cp.add_argument("--gmi-weight", type=float, default=None)
    cp.add_argument("--root-cut-rounds", type=int, default=None)
    cp.add_argument("--jobs", type=int, default=1)
    cp.add_argument("--verbose", action="store_true")
    cp.set_defaults(func=_cmd_compare)

    gp = sub.add_parser("gen", help="generate synthetic instances")
    gp.add_argument("--family", required=True,
                    choices=("knapsack", "setcover", "mixed"))
    gp.add_argument("--seed", type=int, default=1)
    gp.add_argument("--out", required=True)
    gp.add_argument("--count", type=int, default=1)
    gp.add_argument("--n", type=int, default=None, help="variable count")
    gp.add_argument("--rows", type=int, default=None,
                    help="row count (setcover)")
    gp.add_argument("--with-optima", action="store_true",
                    help="solve each instance and record its optimum")
    gp.set_defaults(func=_cmd_gen)

    up = sub.add_parser("cuts", help="dump generated cuts as CSV")
    up.add_argument("file")
    up.add_argument("--rounds", type=int, default=5)
    up.add_argument("--out", required=True)
    up.set_defaults(func=_cmd_cuts)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
