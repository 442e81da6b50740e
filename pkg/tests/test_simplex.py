import numpy as np
import pytest

from splitbranch.errors import NotBasic
from splitbranch.model import EQ, GE, LE, Milp, standardize
from splitbranch.config import Settings
from splitbranch.simplex import (
    BASIC,
    LpWorkspace,
    fractional_basics,
    solve_lp,
    solve_ws,
    tableau_row,
)

from oracles import solve_lp_brute


def _solve(p, **kw):
    return solve_lp(standardize(p), settings=Settings(**kw))


def test_vertex_example():
    """min -x1-x2 s.t. x1+x2 <= 1.5, 0 <= x <= 1 has optimum -1.5."""
    p = Milp(c=[-1, -1], rows=[[1, 1]], senses=[LE], rhs=[1.5],
             lb=[0, 0], ub=[1, 1])
    res = _solve(p)
    assert res.status == "optimal"
    assert res.objective == pytest.approx(-1.5, abs=1e-9)
    status, obj, _ = solve_lp_brute(p)
    assert obj == pytest.approx(res.objective, abs=1e-6)


def test_infeasible_by_rows():
    p = Milp(c=[1], rows=[[1], [1]], senses=[GE, LE], rhs=[2, 1],
             lb=[0], ub=[10])
    assert _solve(p).status == "infeasible"


def test_infeasible_by_bounds():
    sf = standardize(Milp(c=[1], rows=np.zeros((0, 1)), senses=[], rhs=[],
                          lb=[0], ub=[5]))
    ws = LpWorkspace(sf)
    lb, ub = ws.base_bounds()
    lb[0], ub[0] = 3.0, 2.0
    assert solve_ws(ws, lb, ub).status == "infeasible"


def test_unbounded():
    p = Milp(c=[-1], rows=np.zeros((0, 1)), senses=[], rhs=[],
             lb=[0], ub=[np.inf])
    assert _solve(p).status == "unbounded"


def test_equality_constraints():
    p = Milp(c=[1, 2], rows=[[1, 1]], senses=[EQ], rhs=[3],
             lb=[0, 0], ub=[5, 5])
    res = _solve(p)
    assert res.status == "optimal"
    assert res.objective == pytest.approx(3.0)


def test_oracle_equivalence_random_lps():
    """Objective matches vertex enumeration on 100 seeded random boxed LPs."""
    rng = np.random.default_rng(42)
    solved = 0
    for _ in range(100):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(1, 6))
        A = rng.integers(-4, 5, size=(m, n)).astype(float)
        senses = [(LE, GE, EQ)[int(rng.integers(0, 3))] if k else LE
                  for k, _ in enumerate(range(m))]
        lb = rng.integers(-3, 1, size=n).astype(float)
        ub = lb + rng.integers(1, 6, size=n)
        x0 = np.array([rng.uniform(lo, hi) for lo, hi in zip(lb, ub)])
        act = A @ x0
        b = np.empty(m)
        for k, s in enumerate(senses):
            if s == LE:
                b[k] = act[k] + rng.uniform(0, 2)
            elif s == GE:
                b[k] = act[k] - rng.uniform(0, 2)
            else:
                b[k] = act[k]
        c = rng.integers(-5, 6, size=n).astype(float)
        p = Milp(c, A, senses, b, lb, ub)
        res = _solve(p)
        status, obj, _ = solve_lp_brute(p)
        assert res.status == status == "optimal"
        assert res.objective == pytest.approx(obj, abs=1e-6)
        # equality residual at the optimum in standard space
        sf = standardize(p)
        ws = res.ws
        resid = np.abs(ws.A[:, : ws.n_work] @ res.x - ws.b).max()
        assert resid <= 1e-7
        solved += 1
    assert solved == 100


def test_reduced_cost_sign_invariant():
    p = Milp(c=[-2, -1, 3], rows=[[1, 1, 1], [1, -1, 0]], senses=[LE, LE],
             rhs=[4, 1], lb=[0, 0, 0], ub=[3, 3, 3])
    res = _solve(p)
    ws = res.ws
    costs = np.concatenate([ws.c, np.zeros(ws.m)])
    y = costs[res.basis.basic] @ res.binv
    d = costs[: ws.n_work] - y @ ws.A[:, : ws.n_work]
    for i in range(ws.n_work):
        s = res.basis.vstatus[i]
        if s == 0:          # at lower
            assert d[i] >= -1e-9
        elif s == 1:        # at upper
            assert d[i] <= 1e-9


def test_tableau_row_by_elimination():
    """LP {x1 + x2 + s = 1.5} with basis {x1}: row is x1 = 1.5 - x2 - s."""
    p = Milp(c=[-1, -0.5], rows=[[1, 1]], senses=[LE], rhs=[1.5],
             lb=[0, 0], ub=[np.inf, np.inf])
    res = _solve(p)
    assert res.status == "optimal"
    sf = standardize(p)
    col = sf.struct_col_of(0)
    assert res.basis.vstatus[col] == BASIC
    row = tableau_row(res, col)
    assert row.rhs == pytest.approx(1.5)
    got = dict(zip(row.nb_cols.tolist(), row.coefs.tolist()))
    assert got == {1: pytest.approx(1.0), 2: pytest.approx(1.0)}
    assert not row.complemented.any()


def test_tableau_row_reproduces_solution_vector():
    rng = np.random.default_rng(7)
    p = Milp(c=[-3, -2, -1], rows=[[2, 1, 1], [1, 3, 2]], senses=[LE, LE],
             rhs=[4, 6], lb=[0, 0, 0], ub=[2, 2, 2])
    res = _solve(p)
    ws = res.ws
    for r, col in enumerate(res.basis.basic):
        if col >= ws.n_work:
            continue
        row = tableau_row(res, int(col))
        assert row.rhs == pytest.approx(res.x[col], abs=1e-9)
        # row must be a valid equality on sampled feasible LP points
        for _ in range(20):
            z = rng.uniform(0, 2, size=3)
            if np.all(p.rows @ z <= p.rhs + 1e-12):
                x_std = np.concatenate([z, p.rhs - p.rows @ z])
                t = np.where(row.complemented,
                             row.nb_bound - x_std[row.nb_cols],
                             x_std[row.nb_cols] - row.nb_bound)
                recon = row.rhs - float(row.coefs @ t)
                assert recon == pytest.approx(x_std[col], abs=1e-7)


def test_tableau_row_redundant_constraint():
    """The basic slack of a duplicated row reads s = rhs-gap against others."""
    p = Milp(c=[-1], rows=[[1], [1]], senses=[LE, LE], rhs=[1, 2],
             lb=[0], ub=[np.inf])
    res = _solve(p)
    sf = standardize(p)
    slack2 = 2  # columns: x, s1, s2
    assert res.basis.vstatus[slack2] == BASIC
    row = tableau_row(res, slack2)
    assert row.rhs == pytest.approx(1.0)  # s2 = 2 - x = 1 at x = 1


def test_tableau_row_not_basic():
    p = Milp(c=[-1, -1], rows=[[1, 1]], senses=[LE], rhs=[1.5],
             lb=[0, 0], ub=[1, 1])
    res = _solve(p)
    nonbasic = [i for i in range(3) if res.basis.vstatus[i] != BASIC][0]
    with pytest.raises(NotBasic):
        tableau_row(res, nonbasic)


def test_fractional_basics():
    p = Milp(c=[-1, -1, -1], rows=[[2, 2, 0], [0, 0, 2]], senses=[LE, LE],
             rhs=[2.6, 1.0], lb=[0, 0, 0], ub=[1, 1, 1],
             integer_set={0, 1, 2})
    sf = standardize(p)
    res = solve_lp(sf)
    got = fractional_basics(res, sf, 1e-6)
    vals = [res.value_of_original(sf, j) for j in range(3)]
    expect = [(j, v - np.floor(v)) for j, v in enumerate(vals)
              if 1e-6 < v - np.floor(v) < 1 - 1e-6]
    assert [(j, pytest.approx(f)) for j, f in expect] == got
    assert got == sorted(got)


def test_fractional_basics_tolerance_boundary():
    """A value within int_tol of an integer is excluded."""
    p = Milp(c=[-1], rows=[[1]], senses=[LE], rhs=[0.9999999],
             lb=[0], ub=[2], integer_set={0})
    sf = standardize(p)
    res = solve_lp(sf)
    assert fractional_basics(res, sf, 1e-6) == []


def test_fractional_basics_integral_solution():
    p = Milp(c=[-1], rows=[[1]], senses=[LE], rhs=[1.0],
             lb=[0], ub=[2], integer_set={0})
    sf = standardize(p)
    res = solve_lp(sf)
    assert fractional_basics(res, sf) == []


def test_warm_start_reuses_feasible_basis():
    p = Milp(c=[-2, -3], rows=[[1, 2], [3, 1]], senses=[LE, LE], rhs=[4, 6],
             lb=[0, 0], ub=[5, 5])
    sf = standardize(p)
    ws = LpWorkspace(sf)
    lb, ub = ws.base_bounds()
    res1 = solve_ws(ws, lb, ub)
    res2 = solve_ws(ws, lb, ub, start=res1.basis)
    assert res2.status == "optimal"
    assert res2.objective == pytest.approx(res1.objective)
    assert res2.iterations <= 1


def test_cycling_guard_terminates():
    """Classic degenerate cycling instance finishes under the Bland switch."""
    # Beale's example, bounded box added
    A = np.array([
        [0.25, -8.0, -1.0, 9.0],
        [0.5, -12.0, -0.5, 3.0],
        [0.0, 0.0, 1.0, 0.0],
    ])
    p = Milp(c=[-0.75, 150.0, -0.02, 6.0], rows=A, senses=[LE, LE, LE],
             rhs=[0, 0, 1], lb=[0, 0, 0, 0], ub=[10.0] * 4)
    res = _solve(p, bland_after=5)
    assert res.status == "optimal"
    _status, obj, _x = solve_lp_brute(p)
    assert res.objective == pytest.approx(obj, abs=1e-9)
    assert res.iterations < 1000


def test_deterministic_repeat():
    p = Milp(c=[-3, -2, -4], rows=[[1, 1, 2], [2, 0, 1]], senses=[LE, LE],
             rhs=[4, 5], lb=[0, 0, 0], ub=[3, 3, 3])
    r1 = _solve(p)
    r2 = _solve(p)
    assert r1.objective == r2.objective
    np.testing.assert_array_equal(r1.basis.basic, r2.basis.basic)
    np.testing.assert_array_equal(r1.x, r2.x)
