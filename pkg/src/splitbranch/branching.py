"""Branching-candidate scoring rules.

Five base rules (random, fullstrong, pseudocost, gmi, weakgmi) plus the
history-augmented ``hybridgmi``, which adds a small multiple of the last
recorded normalized cut efficacy to the reliability pseudo-cost score so it
acts as a tie breaker.  Every rule is a pure function of the node LP result,
the history, and the seeded generator; ties always break toward the lowest
variable index.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .config import Settings
from .cutgen import (
    GeneratedCut,
    efficacy,
    gmi_from_row,
    to_structural_space,
    weak_gmi_from_row,
)
from .errors import RhsTooIntegral, UnsafeCoefficients, ZeroNorm
from .model import StandardForm
from .simplex import LpResult, LpWorkspace, fractional_basics, solve_ws, tableau_row

RULES = ("random", "fullstrong", "pseudocost", "gmi", "weakgmi", "hybridgmi")


@dataclasses.dataclass
class BranchHistory:
    """Per-variable pseudo-cost statistics and cut-efficacy history."""

    rng: np.random.Generator
    pc_sum_down: np.ndarray
    pc_cnt_down: np.ndarray
    pc_sum_up: np.ndarray
    pc_cnt_up: np.ndarray
    sb_init: np.ndarray
    last_gmi_eff: np.ndarray      # nan until first qualifying cut
    gmi_norm_sum: np.ndarray      # running-average variant, kept behind a flag
    gmi_norm_cnt: np.ndarray

    @classmethod
    def create(cls, n_vars: int, seed: int) -> "BranchHistory":
        z = lambda: np.zeros(n_vars)
        return cls(
            rng=np.random.default_rng(seed),
            pc_sum_down=z(), pc_cnt_down=z(),
            pc_sum_up=z(), pc_cnt_up=z(),
            sb_init=z(),
            last_gmi_eff=np.full(n_vars, np.nan),
            gmi_norm_sum=z(), gmi_norm_cnt=z(),
        )

    def gmi_term(self, j: int, use_avg: bool) -> float:
        if use_avg:
            if self.gmi_norm_cnt[j] == 0:
                return 0.0
            return float(self.gmi_norm_sum[j] / self.gmi_norm_cnt[j])
        v = self.last_gmi_eff[j]
        return 0.0 if np.isnan(v) else float(v)


@dataclasses.dataclass
class CandidateScore:
    var: int
    score: float
    base: float = 0.0
    gmi: float = 0.0


@dataclasses.dataclass
class NodeContext:
    """Everything a rule needs about the node being branched."""

    sf: StandardForm
    ws: LpWorkspace
    res: LpResult
    lb: np.ndarray
    ub: np.ndarray
    settings: Settings
    overrides: dict = dataclasses.field(default_factory=dict)
    sb_lp_iterations: int = 0      # accumulated by strong-branch child solves


def enumerate_candidates(res: LpResult, sf: StandardForm, int_tol: float = 1e-6) -> list[int]:
    """Fractional integer variables at this LP optimum, ascending index."""
    return [j for j, _ in fractional_basics(res, sf, int_tol)]


def argmax_candidate(scores: list[CandidateScore]) -> CandidateScore:
    best = scores[0]
    for s in scores[1:]:
        if s.score > best.score:
            best = s
    return best


def score_by_cut(variant: str, candidates: list[int],
                 ctx: NodeContext) -> list[CandidateScore]:
    """Efficacy of each candidate's own row cut at the LP optimum.

    Rows gated out of cut generation score 0 and therefore never beat a
    candidate with a positive score.
    """
    make = gmi_from_row if variant == "gmi" else weak_gmi_from_row
    s = ctx.settings
    out = []
    for j in candidates:
        score = 0.0
        try:
            row = tableau_row(ctx.res, ctx.sf.struct_col_of(j), s.coef_drop)
            cut_nb = make(row, s.f0_min, s.coef_drop, s.max_dynamism)
            if s.eff_space == "nonbasic":
                score = efficacy(cut_nb, np.zeros(ctx.ws.n_work))
                if s.cut_sink is not None:
                    s.cut_sink(to_structural_space(cut_nb, ctx.sf, ctx.res),
                               ctx.overrides)
            else:
                cut_std = to_structural_space(cut_nb, ctx.sf, ctx.res)
                score = efficacy(cut_std, ctx.res.x[: ctx.sf.n_struct])
                if s.cut_sink is not None:
                    s.cut_sink(cut_std, ctx.overrides)
        except (RhsTooIntegral, UnsafeCoefficients, ZeroNorm):
            score = 0.0
        out.append(CandidateScore(j, score, base=score))
    return out


def _child_gains(ctx: NodeContext, j: int) -> tuple[float, float, bool, bool]:
    """Solve both child LPs of candidate ``j``; gains and feasibility flags."""
    v = ctx.res.value_of_original(ctx.sf, j)
    z = ctx.res.objective
    gains = []
    feas = []
    for lo, hi in ((-np.inf, np.floor(v)), (np.ceil(v), np.inf)):
        lb = ctx.lb.copy()
        ub = ctx.ub.copy()
        col, slo, shi = ctx.sf.bounds_to_std(j, lo, hi)
        lb[col] = max(lb[col], slo)
        ub[col] = min(ub[col], shi)
        child = solve_ws(ctx.ws, lb, ub, ctx.settings, start=ctx.res.basis)
        ctx.sb_lp_iterations += child.iterations
        if child.status == "optimal":
            gains.append(child.objective - z)
            feas.append(True)
        else:
            gains.append(np.inf)
            feas.append(False)
    return gains[0], gains[1], feas[0], feas[1]


def score_fullstrong(candidates: list[int], ctx: NodeContext,
                     hist: BranchHistory | None = None
                     ) -> tuple[list[CandidateScore], bool]:
    """Product of child-LP bound gains for every candidate.

    Returns the scores and a flag set when some candidate proves both of its
    children infeasible, in which case the node can be pruned outright.
    """
    s = ctx.settings
    out = []
    prunable = False
    for j in candidates:
        d_dn, d_up, ok_dn, ok_up = _child_gains(ctx, j)
        if not ok_dn and not ok_up:
            prunable = True
        g_dn = d_dn if ok_dn else s.infeasible_gain
        g_up = d_up if ok_up else s.infeasible_gain
        score = max(g_dn, s.score_eps) * max(g_up, s.score_eps)
        out.append(CandidateScore(j, score, base=score))
    return out, prunable


def score_pseudocost(candidates: list[int], ctx: NodeContext, hist: BranchHistory,
                     reliability: int | None = None
                     ) -> tuple[list[CandidateScore], bool]:
    """Reliability pseudo-cost scores.

    Candidates whose direction counts are below the reliability threshold are
    strong-branch initialized (child LPs solved, history updated); the rest
    are scored from their historical average unit gains.
    """
    s = ctx.settings
    eta = s.reliability if reliability is None else reliability
    fracs = dict(fractional_basics(ctx.res, ctx.sf, s.int_tol))
    out = []
    prunable = False
    for j in candidates:
        f = fracs[j]
        if min(hist.pc_cnt_down[j], hist.pc_cnt_up[j]) < eta:
            d_dn, d_up, ok_dn, ok_up = _child_gains(ctx, j)
            if not ok_dn and not ok_up:
                prunable = True
            hist.sb_init[j] += 1
            # infeasible children are not folded into the averages
            if ok_dn:
                update_pseudocost(hist, j, "down", f, d_dn)
            if ok_up:
                update_pseudocost(hist, j, "up", f, d_up)
            g_dn = d_dn if ok_dn else s.infeasible_gain
            g_up = d_up if ok_up else s.infeasible_gain
            score = max(g_dn, s.score_eps) * max(g_up, s.score_eps)
        else:
            q_dn = hist.pc_sum_down[j] / hist.pc_cnt_down[j] if hist.pc_cnt_down[j] else 0.0
            q_up = hist.pc_sum_up[j] / hist.pc_cnt_up[j] if hist.pc_cnt_up[j] else 0.0
            score = max(q_dn * f, s.score_eps) * max(q_up * (1.0 - f), s.score_eps)
        out.append(CandidateScore(j, score, base=score))
    return out, prunable


def score_random(candidates: list[int], hist: BranchHistory) -> CandidateScore:
    """Uniform pick from the candidate list using the run's generator."""
    pick = int(hist.rng.choice(np.asarray(candidates, dtype=np.int64)))
    return CandidateScore(pick, 1.0, base=1.0)


def record_gmi_history(hist: BranchHistory, round_cuts: list[GeneratedCut],
                       eps: float = 1e-4):
    """Store normalized efficacies of one separation round.

    Each cut's efficacy is normalized by the round maximum; cuts whose raw
    efficacy does not exceed ``eps`` are ignored.  The most recent qualifying
    cut overwrites any previous record for its generating variable.
    """
    if not round_cuts:
        return
    max_raw = max(g.eff for g in round_cuts)
    if max_raw <= 0:
        return
    for g in round_cuts:
        if g.eff > eps:
            norm = g.eff / max_raw
            hist.last_gmi_eff[g.gen_var] = norm
            hist.gmi_norm_sum[g.gen_var] += norm
            hist.gmi_norm_cnt[g.gen_var] += 1


def combine_hybrid_gmi(base: list[CandidateScore], hist: BranchHistory,
                       weight: float = 1e-5, use_avg: bool = False
                       ) -> list[CandidateScore]:
    """Add ``weight * recorded_efficacy`` to each base score.

    With ``weight == 0`` the scores (and hence the selected candidate,
    including tie behavior) are bit-identical to the base rule.
    """
    out = []
    for s in base:
        g = weight * hist.gmi_term(s.var, use_avg)
        out.append(CandidateScore(s.var, s.score + g, base=s.score, gmi=g))
    return out


def update_pseudocost(hist: BranchHistory, j: int, direction: str,
                      f: float, delta: float):
    """Fold one observed child gain into the per-variable averages."""
    delta = max(delta, 0.0)
    unit = delta / f if direction == "down" else delta / (1.0 - f)
    if direction == "down":
        hist.pc_sum_down[j] += unit
        hist.pc_cnt_down[j] += 1
    else:
        hist.pc_sum_up[j] += unit
        hist.pc_cnt_up[j] += 1


def select_branch_var(rule: str, candidates: list[int], ctx: NodeContext,
                      hist: BranchHistory) -> tuple[int, bool]:
    """Dispatch to a rule; returns (variable, node_prunable)."""
    if rule == "random":
        return score_random(candidates, hist).var, False
    if rule == "fullstrong":
        scores, prunable = score_fullstrong(candidates, ctx, hist)
    elif rule == "pseudocost":
        scores, prunable = score_pseudocost(candidates, ctx, hist)
    elif rule == "hybridgmi":
        base, prunable = score_pseudocost(candidates, ctx, hist)
        scores = combine_hybrid_gmi(base, hist, ctx.settings.gmi_weight,
                                    ctx.settings.use_avg_gmi)
    elif rule in ("gmi", "weakgmi"):
        variant = "gmi" if rule == "gmi" else "weak_gmi"
        scores = score_by_cut(variant, candidates, ctx)
        prunable = False
    else:
        raise ValueError(f"unknown branching rule {rule!r}; choose from {RULES}")
    return argmax_candidate(scores).var, prunable
