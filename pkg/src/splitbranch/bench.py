"""Experiment harness: run grids, filter, aggregate, test.

Aggregation follows the usual solver-benchmark protocol: instance-seed pairs
are the data points, shifted geometric means summarize each metric (shifts
100 nodes / 10 s solve time / 1 s branching time), instances are dropped
whenever any compared run solved without branching, errored, or hit a
non-time resource limit, and paired rule comparisons are backed by exact
Wilcoxon signed-rank tests for small samples.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from pathlib import Path

import numpy as np

from .bnb import solve
from .config import Settings
from .errors import AllZeroDiffs, EmptyInput, IncompleteGrid
from .io import InstanceManifest, parse_mps

METRIC_SHIFTS = {"nodes": 100.0, "time_s": 10.0, "branch_time_s": 1.0}

CSV_COLUMNS = ("instance", "seed", "rule", "status", "nodes", "time_s",
               "branch_time_s", "objective", "bound", "root_branch_var")


@dataclasses.dataclass(frozen=True)
class RunRecord:
    """One (instance, seed, rule) solve outcome."""

    instance: str
    seed: int
    rule: str
    status: str               # optimal | time_limit | node_limit | error
    nodes: int
    time_s: float
    branch_time_s: float
    objective: float
    bound: float
    root_branch_var: int

    def to_row(self) -> list:
        return [self.instance, self.seed, self.rule, self.status, self.nodes,
                repr(self.time_s), repr(self.branch_time_s),
                repr(self.objective), repr(self.bound), self.root_branch_var]

    @classmethod
    def from_row(cls, row: list[str]) -> "RunRecord":
        return cls(row[0], int(row[1]), row[2], row[3], int(row[4]),
                   float(row[5]), float(row[6]), float(row[7]),
                   float(row[8]), int(row[9]))


@dataclasses.dataclass
class AggregateTable:
    """Shifted geometric means per rule per metric over one pair set."""

    label: str
    pair_count: int
    means: dict[str, dict[str, float]]     # metric -> rule -> sgm
    shifts: dict[str, float]

    def to_markdown(self) -> str:
        rules = sorted({r for per in self.means.values() for r in per})
        head = f"| metric ({self.label}, n={self.pair_count}) | " + " | ".join(rules) + " |"
        sep = "|" + "---|" * (len(rules) + 1)
        lines = [head, sep]
        for metric, per in self.means.items():
            cells = " | ".join(f"{per[r]:.2f}" if r in per else "-" for r in rules)
            lines.append(f"| {metric} (shift {self.shifts[metric]:g}) | {cells} |")
        return "\n".join(lines)


def shifted_geometric_mean(values, shift: float) -> float:
    """(prod (v_i + s))^(1/n) - s, computed in log space."""
    v = np.asarray(list(values), dtype=float)
    if v.size == 0:
        raise EmptyInput("shifted geometric mean of nothing")
    if shift <= 0 or np.any(v < 0):
        raise ValueError("need shift > 0 and nonnegative values")
    return float(np.exp(np.mean(np.log(v + shift))) - shift)


def _midranks(absd: np.ndarray) -> np.ndarray:
    order = np.argsort(absd, kind="stable")
    ranks = np.empty(absd.size)
    sorted_vals = absd[order]
    i = 0
    while i < absd.size:
        j = i
        while j + 1 < absd.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def wilcoxon_signed_rank(diffs, alternative: str = "two-sided",
                         exact_max_n: int = 20) -> tuple[float, float]:
    """Signed-rank statistic W+ and its p-value.

    Zero differences are dropped; ties receive midranks.  For n <= 20 the
    p-value is exact (distribution of W+ enumerated over all sign patterns
    via dynamic programming on doubled ranks); above that a normal
    approximation with continuity and tie corrections is used.
    """
    d = np.asarray(list(diffs), dtype=float)
    d = d[d != 0.0]
    n = d.size
    if n == 0:
        raise AllZeroDiffs("all paired differences are zero")
    ranks = _midranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())

    if n <= exact_max_n:
        scaled = np.rint(2.0 * ranks).astype(np.int64)
        total = int(scaled.sum())
        counts = np.zeros(total + 1, dtype=float)
        counts[0] = 1.0
        for r in scaled:
            shifted = np.zeros_like(counts)
            shifted[r:] = counts[: counts.size - r]
            counts = counts + shifted
        counts /= 2.0 ** n
        w2 = int(round(2.0 * w_plus))
        p_le = float(counts[: w2 + 1].sum())
        p_ge = float(counts[w2:].sum())
        if alternative == "greater":
            p = p_ge
        elif alternative == "less":
            p = p_le
        else:
            p = min(1.0, 2.0 * min(p_le, p_ge))
        return w_plus, p

    mu = n * (n + 1) / 4.0
    tie_adj = 0.0
    _, tie_counts = np.unique(np.abs(d), return_counts=True)
    for t in tie_counts:
        tie_adj += t ** 3 - t
    sigma = math.sqrt(n * (n + 1) * (2 * n + 1) / 24.0 - tie_adj / 48.0)

    def phi(z):
        return 0.5 * math.erfc(-z / math.sqrt(2.0))

    if alternative == "greater":
        z = (w_plus - mu - 0.5) / sigma
        p = 1.0 - phi(z)
    elif alternative == "less":
        z = (w_plus - mu + 0.5) / sigma
        p = phi(z)
    else:
        z = (abs(w_plus - mu) - 0.5) / sigma
        p = min(1.0, 2.0 * (1.0 - phi(z)))
    return w_plus, p


# -- filtering / pairing ------------------------------------------------------

def filter_runs(records: list[RunRecord], rules: list[str],
                seeds: list[int]) -> set[str]:
    """Instances retained for comparison of ``rules`` over ``seeds``.

    An instance is dropped when any of its runs under any compared rule
    solved at the root (no branching), errored, or hit a non-time resource
    limit.  Raises :class:`IncompleteGrid` when a grid cell is missing.
    """
    instances = sorted({r.instance for r in records})
    by_key = {(r.instance, r.rule, r.seed): r for r in records}
    retained = set()
    for inst in instances:
        keep = True
        for rule in rules:
            for seed in seeds:
                rec = by_key.get((inst, rule, seed))
                if rec is None:
                    raise IncompleteGrid(f"missing run ({inst}, {rule}, {seed})")
                if rec.status == "error" or rec.status == "node_limit":
                    keep = False
                elif rec.status == "optimal" and rec.nodes <= 1:
                    keep = False
        if keep:
            retained.add(inst)
    return retained


@dataclasses.dataclass
class AffectedReport:
    affected: set[tuple[str, int]]         # node counts differ
    root_differs: set[tuple[str, int]]     # root branching variable differs
    compared: int


def affected_pairs(records_a: list[RunRecord],
                   records_b: list[RunRecord]) -> AffectedReport:
    """Instance-seed pairs where two rules took different solving paths.

    Only pairs solved to optimality by both rules are compared; node-count
    differences define "affected", root-decision differences are reported
    separately.
    """
    a = {(r.instance, r.seed): r for r in records_a if r.status == "optimal"}
    b = {(r.instance, r.seed): r for r in records_b if r.status == "optimal"}
    common = sorted(set(a) & set(b))
    affected = {k for k in common if a[k].nodes != b[k].nodes}
    root_diff = {k for k in common
                 if a[k].root_branch_var != b[k].root_branch_var}
    return AffectedReport(affected, root_diff, len(common))


def build_tables(records: list[RunRecord], rules: list[str],
                 seeds: list[int]) -> list[AggregateTable]:
    """All-solved and at-least-one-solved summary tables after filtering."""
    retained = filter_runs(records, rules, seeds)
    recs = [r for r in records if r.instance in retained and r.rule in rules
            and r.seed in seeds]
    by_key = {(r.instance, r.seed, r.rule): r for r in recs}
    pairs = sorted({(r.instance, r.seed) for r in recs})

    solved_all, solved_any = [], []
    for key in pairs:
        states = [by_key[key + (rule,)].status == "optimal" for rule in rules]
        if all(states):
            solved_all.append(key)
        if any(states):
            solved_any.append(key)

    def table(label, keys, metrics):
        means: dict[str, dict[str, float]] = {m: {} for m in metrics}
        for metric in metrics:
            for rule in rules:
                vals = [getattr(by_key[k + (rule,)], metric) for k in keys]
                if vals:
                    means[metric][rule] = shifted_geometric_mean(
                        vals, METRIC_SHIFTS[metric])
        return AggregateTable(label, len(keys), means,
                              {m: METRIC_SHIFTS[m] for m in metrics})

    return [
        table("solved by all", solved_all, ["nodes", "time_s", "branch_time_s"]),
        table("solved by at least one", solved_any, ["time_s", "branch_time_s"]),
    ]


def ratio_table(records: list[RunRecord], rule_a: str, rule_b: str,
                seeds: list[int]) -> dict:
    """Affected-pair comparison of two rules: sgm ratios and test p-values."""
    recs_a = [r for r in records if r.rule == rule_a and r.seed in seeds]
    recs_b = [r for r in records if r.rule == rule_b and r.seed in seeds]
    report = affected_pairs(recs_a, recs_b)
    a = {(r.instance, r.seed): r for r in recs_a}
    b = {(r.instance, r.seed): r for r in recs_b}
    keys = sorted(report.affected)
    out = {
        "rule_a": rule_a, "rule_b": rule_b,
        "affected": len(report.affected),
        "compared": report.compared,
        "root_differs": len(report.root_differs),
    }
    if keys:
        for metric in ("nodes", "time_s"):
            sa = shifted_geometric_mean(
                [getattr(a[k], metric) for k in keys], METRIC_SHIFTS[metric])
            sb = shifted_geometric_mean(
                [getattr(b[k], metric) for k in keys], METRIC_SHIFTS[metric])
            out[f"ratio_{metric}"] = sb / sa if sa > 0 else np.nan
        diffs = [a[k].nodes - b[k].nodes for k in keys]
        try:
            _w, p = wilcoxon_signed_rank(diffs)
            out["wilcoxon_nodes_p"] = p
        except AllZeroDiffs:
            out["wilcoxon_nodes_p"] = np.nan
    return out


# -- execution ----------------------------------------------------------------

def run_one(path: str, rule: str, seed: int, settings_kwargs: dict,
            provided: float | None = None) -> RunRecord:
    """Load one instance from MPS and solve it under one rule and seed."""
    p = parse_mps(Path(path).read_text())
    settings = Settings.from_env(**settings_kwargs)
    settings.seed = seed
    settings.provided_solution = provided
    try:
        sol, stats = solve(p, rule, settings)
    except Exception:
        return RunRecord(p.name, seed, rule, "error", 0, 0.0, 0.0,
                         np.nan, np.nan, -1)
    return RunRecord(
        instance=p.name, seed=seed, rule=rule, status=stats.status,
        nodes=stats.nodes, time_s=stats.total_time,
        branch_time_s=stats.branch_time, objective=sol.objective,
        bound=stats.bound, root_branch_var=stats.root_branch_var,
    )


def _read_records(path: Path) -> list[RunRecord]:
    records = []
    with path.open() as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is not None and tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header in {path}")
        for row in reader:
            records.append(RunRecord.from_row(row))
    return records


def load_records(path: str | Path) -> list[RunRecord]:
    return _read_records(Path(path))


def run_experiment(manifest: InstanceManifest, rules: list[str],
                   seeds: list[int], out_csv: str | Path,
                   settings_kwargs: dict | None = None,
                   provided_solutions: bool = False,
                   jobs: int = 1,
                   progress=None) -> list[RunRecord]:
    """Execute the full rule x instance x seed grid, resumably.

    Completed (instance, rule, seed) cells found in ``out_csv`` are skipped,
    so an interrupted experiment can simply be re-run.  New records are
    appended and flushed as they complete.
    """
    settings_kwargs = settings_kwargs or {}
    out_csv = Path(out_csv)
    records: list[RunRecord] = []
    have: set[tuple] = set()
    fresh = not out_csv.exists()
    if not fresh:
        records = _read_records(out_csv)
        have = {(r.instance, r.rule, r.seed) for r in records}

    names = {}
    for path, opt in manifest.entries:
        names[path] = (parse_mps(Path(path).read_text()).name, opt)

    todo = []
    for path, (name, opt) in names.items():
        for rule in rules:
            for seed in seeds:
                if (name, rule, seed) not in have:
                    provided = opt if provided_solutions else None
                    todo.append((path, rule, seed, provided))

    with out_csv.open("a", newline="") as fh:
        writer = csv.writer(fh)
        if fresh:
            writer.writerow(CSV_COLUMNS)
            fh.flush()

        def sink(rec: RunRecord):
            records.append(rec)
            writer.writerow(rec.to_row())
            fh.flush()
            if progress:
                progress(rec)

        if jobs <= 1:
            for path, rule, seed, provided in todo:
                sink(run_one(path, rule, seed, settings_kwargs, provided))
        else:
            from concurrent.futures import ProcessPoolExecutor

            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [
                    pool.submit(run_one, path, rule, seed, settings_kwargs, provided)
                    for path, rule, seed, provided in todo
                ]
                for fut in futures:
                    sink(fut.result())
    return records
