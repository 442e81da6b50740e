import pytest

from splitbranch.branching import (
    BranchHistory,
    CandidateScore,
    NodeContext,
    argmax_candidate,
    combine_hybrid_gmi,
    enumerate_candidates,
    record_gmi_history,
    score_by_cut,
    score_fullstrong,
    score_pseudocost,
    score_random,
    select_branch_var,
    update_pseudocost,
)
from splitbranch.config import Settings
from splitbranch.cutgen import GeneratedCut
from splitbranch.io import generate_instance
from splitbranch.model import LE, Milp, standardize
from splitbranch.simplex import LpWorkspace, solve_ws


def node_ctx(p, settings=None):
    settings = settings or Settings()
    sf = standardize(p)
    ws = LpWorkspace(sf, (), settings)
    lb, ub = ws.base_bounds()
    res = solve_ws(ws, lb, ub, settings)
    assert res.status == "optimal"
    return NodeContext(sf, ws, res, lb, ub, settings)


def fractional_knapsack():
    # LP optimum has x0 fractional: weights 3,4 cap 5, profits 4,5
    return Milp(c=[-4, -5], rows=[[3, 4]], senses=[LE], rhs=[5],
                lb=[0, 0], ub=[1, 1], integer_set={0, 1})


def test_enumerate_candidates():
    p = Milp(c=[-1, -1, -1], rows=[[2, 0, 0], [0, 1, 2]], senses=[LE, LE],
             rhs=[1.0, 2.0], lb=[0] * 3, ub=[1] * 3, integer_set={0, 1, 2})
    ctx = node_ctx(p)
    cands = enumerate_candidates(ctx.res, ctx.sf)
    vals = [ctx.res.value_of_original(ctx.sf, j) for j in range(3)]
    expect = [j for j, v in enumerate(vals) if 1e-6 < v % 1 < 1 - 1e-6]
    assert cands == expect and cands == sorted(cands)


def test_enumerate_candidates_continuous_only():
    p = Milp(c=[-1], rows=[[1]], senses=[LE], rhs=[0.5], lb=[0], ub=[1])
    ctx = node_ctx(p)
    assert enumerate_candidates(ctx.res, ctx.sf) == []


def test_score_fullstrong_product():
    """Gains multiply; both-infeasible children flag the node prunable."""
    ctx = node_ctx(fractional_knapsack())
    cands = enumerate_candidates(ctx.res, ctx.sf)
    scores, prunable = score_fullstrong(cands, ctx)
    assert not prunable
    s = ctx.settings
    for cs in scores:
        d_dn, d_up, ok_dn, ok_up = _gains_by_hand(ctx, cs.var)
        g_dn = d_dn if ok_dn else s.infeasible_gain
        g_up = d_up if ok_up else s.infeasible_gain
        assert cs.score == pytest.approx(
            max(g_dn, s.score_eps) * max(g_up, s.score_eps))


def _gains_by_hand(ctx, j):
    from splitbranch.branching import _child_gains
    return _child_gains(ctx, j)


def test_fullstrong_both_children_infeasible_marks_prunable():
    """An equality pinning an integer variable at 0.5 kills both children."""
    p = Milp(c=[0, -1], rows=[[1, 0], [0, 1]], senses=["==", LE],
             rhs=[0.5, 3], lb=[0, 0], ub=[1, 5], integer_set={0, 1})
    ctx = node_ctx(p)
    cands = enumerate_candidates(ctx.res, ctx.sf)
    assert cands == [0]
    scores, prunable = score_fullstrong(cands, ctx)
    assert prunable
    assert scores[0].score == pytest.approx(ctx.settings.infeasible_gain ** 2)


def test_fullstrong_epsilon_floor():
    s = Settings()
    # one degenerate direction: delta- = 0, delta+ = 2 -> eps * 2
    score = max(0.0, s.score_eps) * max(2.0, s.score_eps)
    assert score == pytest.approx(2e-6)


def test_pseudocost_formula_and_reliability():
    ctx = node_ctx(fractional_knapsack())
    cands = enumerate_candidates(ctx.res, ctx.sf)
    hist = BranchHistory.create(2, seed=1)

    # eta=0: pure pseudo-costs, empty history -> eps*eps floor everywhere
    scores, _ = score_pseudocost(cands, ctx, hist, reliability=0)
    for cs in scores:
        assert cs.score == pytest.approx(ctx.settings.score_eps ** 2)
    assert hist.sb_init.sum() == 0

    # fresh variable with eta=8 routes through strong-branch initialization
    scores_sb, _ = score_pseudocost(cands, ctx, hist, reliability=8)
    assert hist.sb_init.sum() == len(cands)
    full, _ = score_fullstrong(cands, ctx)
    for a, b in zip(scores_sb, full):
        assert a.score == pytest.approx(b.score)

    # seeded history with eta=0 reproduces the product formula
    from splitbranch.simplex import fractional_basics

    hist2 = BranchHistory.create(2, seed=1)
    update_pseudocost(hist2, 0, "down", 0.3, 0.6)   # q- = 2
    update_pseudocost(hist2, 0, "up", 0.3, 0.7)     # q+ = 1
    if 0 in cands:
        f = dict(fractional_basics(ctx.res, ctx.sf))[0]
        (s0,), _ = score_pseudocost([0], ctx, hist2, reliability=0)
        q_dn = 2.0
        q_up = 0.7 / (1 - 0.3)
        expect = max(q_dn * f, 1e-6) * max(q_up * (1 - f), 1e-6)
        assert s0.score == pytest.approx(expect)


def test_update_pseudocost_examples():
    hist = BranchHistory.create(1, seed=1)
    update_pseudocost(hist, 0, "down", 0.3, 0.6)
    assert hist.pc_sum_down[0] == pytest.approx(2.0)
    update_pseudocost(hist, 0, "down", 0.5, 0.0)
    assert hist.pc_cnt_down[0] == 2
    update_pseudocost(hist, 0, "down", 0.5, 3.5)   # unit gain 7.0
    q = hist.pc_sum_down[0] / hist.pc_cnt_down[0]
    assert q == pytest.approx((2.0 + 0.0 + 7.0) / 3)
    update_pseudocost(hist, 0, "up", 0.2, -1.0)    # clamped to zero
    assert hist.pc_sum_up[0] == 0.0 and hist.pc_cnt_up[0] == 1


def test_score_random_deterministic():
    h1 = BranchHistory.create(5, seed=9)
    h2 = BranchHistory.create(5, seed=9)
    picks1 = [score_random([0, 2], h1).var for _ in range(10)]
    picks2 = [score_random([0, 2], h2).var for _ in range(10)]
    assert picks1 == picks2
    assert set(picks1) <= {0, 2}
    assert score_random([3], h1).var == 3


def test_score_by_cut_selection_and_gate():
    ctx = node_ctx(fractional_knapsack())
    cands = enumerate_candidates(ctx.res, ctx.sf)
    scores = score_by_cut("gmi", cands, ctx)
    assert all(s.score >= 0 for s in scores)
    chosen = argmax_candidate(scores)
    assert chosen.score == max(s.score for s in scores)
    # argmax with ties prefers the lower index
    tie = [CandidateScore(1, 0.8), CandidateScore(4, 0.8), CandidateScore(5, 0.3)]
    assert argmax_candidate(tie).var == 1
    gated = [CandidateScore(2, 0.0), CandidateScore(3, 0.1)]
    assert argmax_candidate(gated).var == 3


def test_gmi_weak_agree_without_integer_nonbasics():
    """Rows whose nonbasics are all continuous score identically."""
    p = Milp(c=[-1, -2], rows=[[1, 1]], senses=[LE], rhs=[1.5],
             lb=[0, 0], ub=[4, 0.75], integer_set={0})
    ctx = node_ctx(p)
    cands = enumerate_candidates(ctx.res, ctx.sf)
    assert cands == [0]
    a = score_by_cut("gmi", cands, ctx)
    b = score_by_cut("weak_gmi", cands, ctx)
    assert a[0].score == pytest.approx(b[0].score, abs=1e-12)


def test_record_gmi_history_normalization():
    hist = BranchHistory.create(4, seed=1)
    mk = lambda var, eff: GeneratedCut(var, None, None, eff)
    record_gmi_history(hist, [mk(1, 0.5), mk(2, 0.25)], eps=1e-4)
    assert hist.last_gmi_eff[1] == pytest.approx(1.0)
    assert hist.last_gmi_eff[2] == pytest.approx(0.5)
    # below-eps raw efficacy is not recorded (previous value kept)
    record_gmi_history(hist, [mk(2, 5e-5), mk(3, 1.0)], eps=1e-4)
    assert hist.last_gmi_eff[2] == pytest.approx(0.5)
    assert hist.last_gmi_eff[3] == pytest.approx(1.0)
    # most recent qualifying round overwrites
    record_gmi_history(hist, [mk(1, 0.1), mk(3, 0.4)], eps=1e-4)
    assert hist.last_gmi_eff[1] == pytest.approx(0.25)


def test_combine_hybrid_examples():
    hist = BranchHistory.create(3, seed=1)
    hist.last_gmi_eff[0] = 0.5
    base = [CandidateScore(0, 3.0, base=3.0)]
    out = combine_hybrid_gmi(base, hist, weight=1e-5)
    assert out[0].score == pytest.approx(3.000005)
    assert out[0].base == 3.0 and out[0].gmi == pytest.approx(5e-6)

    # w = 0 keeps scores bit-identical
    out0 = combine_hybrid_gmi(base, hist, weight=0.0)
    assert out0[0].score == base[0].score

    # base tie broken by the larger recorded efficacy under any w > 0
    hist.last_gmi_eff[1] = 0.9
    hist.last_gmi_eff[2] = 0.1
    tied = [CandidateScore(1, 1.0, base=1.0), CandidateScore(2, 1.0, base=1.0)]
    picked = argmax_candidate(combine_hybrid_gmi(tied, hist, weight=1e-5))
    assert picked.var == 1
    hist.last_gmi_eff[1] = 0.1
    hist.last_gmi_eff[2] = 0.9
    picked = argmax_candidate(combine_hybrid_gmi(tied, hist, weight=1e-5))
    assert picked.var == 2


def test_missing_history_counts_as_zero():
    hist = BranchHistory.create(2, seed=1)
    base = [CandidateScore(0, 1.0, base=1.0), CandidateScore(1, 1.0, base=1.0)]
    hist.last_gmi_eff[1] = 0.3
    out = combine_hybrid_gmi(base, hist, weight=1e-5)
    assert out[0].gmi == 0.0 and out[1].gmi > 0
    assert argmax_candidate(out).var == 1


def test_average_variant():
    hist = BranchHistory.create(2, seed=1)
    mk = lambda var, eff: GeneratedCut(var, None, None, eff)
    record_gmi_history(hist, [mk(0, 0.5), mk(1, 1.0)], eps=1e-4)
    record_gmi_history(hist, [mk(0, 1.0)], eps=1e-4)
    assert hist.gmi_term(0, use_avg=False) == pytest.approx(1.0)
    assert hist.gmi_term(0, use_avg=True) == pytest.approx(0.75)


def test_select_branch_var_dispatch():
    ctx = node_ctx(fractional_knapsack())
    hist = BranchHistory.create(2, seed=1)
    cands = enumerate_candidates(ctx.res, ctx.sf)
    for rule in ("random", "fullstrong", "pseudocost", "gmi", "weakgmi",
                 "hybridgmi"):
        j, prunable = select_branch_var(rule, cands, ctx, hist)
        assert j in cands
    with pytest.raises(ValueError):
        select_branch_var("nosuch", cands, ctx, hist)


def test_rules_deterministic_per_seed():
    p = generate_instance("setcover", 5)
    for rule in ("gmi", "weakgmi", "fullstrong"):
        ctx = node_ctx(p)
        hist = BranchHistory.create(p.n_vars, seed=3)
        cands = enumerate_candidates(ctx.res, ctx.sf)
        if not cands:
            continue
        a = select_branch_var(rule, cands, ctx, hist)
        ctx2 = node_ctx(p)
        hist2 = BranchHistory.create(p.n_vars, seed=3)
        b = select_branch_var(rule, cands, ctx2, hist2)
        assert a == b
