"""Branch-and-cut driver: frontier, bounding, root cut rounds, statistics.

Node selection is best-bound first (ties by node id) with a DFS alternative
behind a setting.  Cuts are separated at the root only; the cut-scoring
branching rules generate their cuts per node but never add them.  Wall time
spent inside the branching rule, including its strong-branch child LPs, is
accounted separately so "time without branching time" is computable.
"""

from __future__ import annotations

import dataclasses
import heapq
import time

import numpy as np

from .branching import (
    BranchHistory,
    NodeContext,
    enumerate_candidates,
    record_gmi_history,
    select_branch_var,
    update_pseudocost,
)
from .config import Settings
from .cutgen import generate_gmi_cuts, select_cuts
from .errors import InconsistentBounds, NotFractional, NumericalFailure
from .model import Milp, Solution, check_feasible, objective_value, standardize
from .simplex import LpWorkspace, apply_overrides, solve_ws


@dataclasses.dataclass
class Node:
    """One subproblem of the enumeration tree."""

    id: int
    parent: int
    depth: int
    overrides: dict[int, tuple[float, float]]
    lb: float                      # parent LP objective (root: -inf)
    basis: object = None           # warm-start hint
    branch_var: int | None = None
    branch_dir: str | None = None
    branch_frac: float = 0.0


@dataclasses.dataclass
class SolveStats:
    nodes: int = 0
    branch_count: int = 0
    total_time: float = 0.0
    branch_time: float = 0.0
    lp_iterations: int = 0
    cuts_added: int = 0
    incumbent: float = np.inf
    bound: float = -np.inf
    gap: float = np.inf
    status: str = "optimal"        # optimal | time_limit | node_limit | error
    root_branch_var: int = -1


def branch(node: Node, j: int, lp_value: float, int_tol: float = 1e-6) -> tuple[Node, Node]:
    """Split ``node`` on variable ``j`` at its fractional LP value.

    The children carry x_j <= floor(v) and x_j >= ceil(v); together they
    keep every integer point of the parent.
    """
    frac = lp_value - np.floor(lp_value)
    if frac <= int_tol or frac >= 1.0 - int_tol:
        raise NotFractional(f"variable {j} already integral at {lp_value}")
    lo_old, hi_old = node.overrides.get(j, (-np.inf, np.inf))
    down = dict(node.overrides)
    down[j] = (lo_old, min(hi_old, float(np.floor(lp_value))))
    up = dict(node.overrides)
    up[j] = (max(lo_old, float(np.ceil(lp_value))), hi_old)
    mk = lambda ov, d: Node(
        id=-1, parent=node.id, depth=node.depth + 1, overrides=ov,
        lb=node.lb, branch_var=j, branch_dir=d, branch_frac=float(frac),
    )
    return mk(down, "down"), mk(up, "up")


def root_cut_loop(sf, res, settings: Settings, hist: BranchHistory):
    """Up to ``root_cut_rounds`` rounds of separation at the root.

    Every round records raw efficacies into the history before selection.
    Stops early when a round yields no cut or the bound stops improving.
    Returns the (possibly extended) workspace, the final LP result, and the
    number of cuts appended.
    """
    ws = res.ws
    cuts: list = list(ws.cuts)
    added = 0
    lp_iters = 0
    for _ in range(settings.root_cut_rounds):
        raws = generate_gmi_cuts(sf, res, settings)
        record_gmi_history(hist, raws, settings.record_eps)
        selected = select_cuts(raws, settings)
        if not selected:
            break
        cuts.extend(g.cut_std for g in selected)
        new_ws = LpWorkspace(sf, cuts, settings)
        start = new_ws.migrate_basis(res.basis, ws)
        lb, ub = new_ws.base_bounds()
        new_res = solve_ws(new_ws, lb, ub, settings, start=start)
        lp_iters += new_res.iterations
        if new_res.status != "optimal":
            return new_ws, new_res, added + len(selected), lp_iters
        improvement = new_res.objective - res.objective
        ws, res = new_ws, new_res
        added += len(selected)
        if improvement < 1e-9:
            break
    return ws, res, added, lp_iters


def solve(p: Milp, rule: str = "pseudocost",
          settings: Settings | None = None) -> tuple[Solution, SolveStats]:
    """Solve a MILP to proven optimality within the configured limits."""
    settings = settings or Settings()
    t0 = time.perf_counter()
    stats = SolveStats()

    def done(sol: Solution) -> tuple[Solution, SolveStats]:
        stats.total_time = time.perf_counter() - t0
        return sol, stats

    if not p.bounds_consistent():
        stats.status = "optimal"
        stats.incumbent = np.inf
        stats.bound = np.inf
        stats.nodes = 0
        return done(Solution("infeasible", np.inf))

    try:
        sf = standardize(p)
    except InconsistentBounds:
        stats.incumbent = np.inf
        stats.bound = np.inf
        return done(Solution("infeasible", np.inf))

    hist = BranchHistory.create(p.n_vars, settings.seed)
    ws = LpWorkspace(sf, (), settings)
    lb0, ub0 = ws.base_bounds()
    try:
        root_res = solve_ws(ws, lb0, ub0, settings)
    except NumericalFailure:
        stats.status = "error"
        return done(Solution("limit", np.nan))
    stats.nodes = 1
    stats.lp_iterations += root_res.iterations
    if root_res.status == "infeasible":
        stats.incumbent = np.inf
        stats.bound = np.inf
        return done(Solution("infeasible", np.inf))
    if root_res.status == "unbounded":
        stats.bound = -np.inf
        return done(Solution("unbounded", -np.inf))
    if root_res.status != "optimal":
        stats.status = "error"
        return done(Solution("limit", np.nan))

    if settings.root_cut_rounds > 0:
        ws, root_res, stats.cuts_added, cut_iters = root_cut_loop(
            sf, root_res, settings, hist)
        stats.lp_iterations += cut_iters
        if root_res.status == "infeasible":
            # valid cuts emptied the relaxation: no integer point exists
            stats.incumbent = np.inf
            stats.bound = np.inf
            return done(Solution("infeasible", np.inf))
        if root_res.status != "optimal":
            stats.status = "error"
            return done(Solution("limit", np.nan))

    inc_obj = np.inf
    inc_x = None
    if settings.provided_solution is not None:
        inc_obj = float(settings.provided_solution)

    next_id = 1
    frontier: list[tuple] = []
    root = Node(id=0, parent=-1, depth=0, overrides={}, lb=root_res.objective)

    def push(node: Node):
        if settings.node_order == "dfs":
            key = (-node.id,)
        else:
            key = (node.lb, node.id)
        heapq.heappush(frontier, (key, node))

    push(root)
    status = "optimal"

    while frontier:
        if time.perf_counter() - t0 > settings.time_limit:
            status = "time_limit"
            break
        if settings.node_limit is not None and stats.nodes >= settings.node_limit:
            status = "node_limit"
            break
        _key, node = heapq.heappop(frontier)
        if node.lb >= inc_obj - settings.prune_tol:
            continue

        if node.id == 0:
            res = root_res
        else:
            lb, ub = ws.base_bounds()
            apply_overrides(sf, lb, ub, node.overrides)
            try:
                res = solve_ws(ws, lb, ub, settings, start=node.basis)
            except NumericalFailure:
                status = "error"
                break
            stats.nodes += 1
            stats.lp_iterations += res.iterations
            if res.status in ("iteration_limit",):
                status = "error"
                break
            if res.status == "unbounded":
                return done(Solution("unbounded", -np.inf))
            # pseudo-cost bookkeeping from the realized branching
            if res.status == "optimal" and node.branch_var is not None:
                delta = max(res.objective - node.lb, 0.0)
                update_pseudocost(hist, node.branch_var, node.branch_dir,
                                  node.branch_frac, delta)
            if res.status == "infeasible":
                continue
        if res.objective >= inc_obj - settings.prune_tol:
            continue

        candidates = enumerate_candidates(res, sf, settings.int_tol)
        if not candidates:
            x = res.x_original(sf)
            for j in p.integer_set:
                x[j] = round(x[j])
            obj = objective_value(p, x)
            if obj < inc_obj and check_feasible(p, x, settings.feas_tol,
                                                settings.int_tol):
                inc_obj = obj
                inc_x = x
            continue

        node_lb, node_ub = ws.base_bounds()
        apply_overrides(sf, node_lb, node_ub, node.overrides)
        ctx = NodeContext(sf, ws, res, node_lb, node_ub, settings,
                          overrides=node.overrides)
        t_b = time.perf_counter()
        j, prunable = select_branch_var(rule, candidates, ctx, hist)
        stats.branch_time += time.perf_counter() - t_b
        stats.lp_iterations += ctx.sb_lp_iterations
        if prunable:
            continue
        if node.id == 0:
            stats.root_branch_var = j

        v = res.value_of_original(sf, j)
        down, up = branch(node, j, v, settings.int_tol)
        for child in (down, up):
            child.id = next_id
            next_id += 1
            child.lb = res.objective
            child.basis = res.basis
            push(child)
        stats.branch_count += 1

    frontier_lbs = [node.lb for _k, node in frontier]
    if status == "optimal":
        stats.bound = inc_obj if np.isfinite(inc_obj) else np.inf
        stats.incumbent = inc_obj
        stats.status = "optimal"
        if np.isfinite(inc_obj):
            sol = Solution("optimal", inc_obj, inc_x)
        else:
            sol = Solution("infeasible", np.inf)
        stats.gap = 0.0
        return done(sol)

    stats.status = status if status in ("time_limit", "node_limit", "error") else "error"
    stats.bound = min(frontier_lbs) if frontier_lbs else (
        inc_obj if np.isfinite(inc_obj) else -np.inf)
    stats.incumbent = inc_obj
    if np.isfinite(inc_obj):
        stats.gap = abs(inc_obj - stats.bound) / max(abs(inc_obj), 1e-10)
        return done(Solution("feasible" if inc_x is not None else "limit",
                             inc_obj, inc_x))
    return done(Solution("limit", np.nan))
