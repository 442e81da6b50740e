import numpy as np
import pytest

from splitbranch.config import Settings
from splitbranch.cutgen import (
    Cut,
    ValidityOracle,
    check_cut_validity,
    efficacy,
    elementary_split,
    gmi_from_row,
    separate_round,
    split_is_lattice_free,
    split_of_gmi,
    to_original_space,
    to_structural_space,
    weak_gmi_from_row,
)
from splitbranch.errors import NotFractional, RhsTooIntegral, TooLargeToEnumerate
from splitbranch.io import generate_instance
from splitbranch.model import LE, Milp, standardize
from splitbranch.simplex import TableauRow, solve_lp, tableau_row



def mkrow(rhs, coefs, ints, compl=None, bounds=None, cols=None):
    k = len(coefs)
    return TableauRow(
        basic_col=0, basic_orig=0, rhs=rhs,
        nb_cols=np.array(cols if cols is not None else range(1, k + 1),
                         dtype=np.int64),
        coefs=np.array(coefs, dtype=float),
        complemented=np.array(compl if compl is not None else [False] * k),
        nb_bound=np.array(bounds if bounds is not None else [0.0] * k),
        nb_int=np.array(ints, dtype=bool),
    )


# -- formula-level checks -----------------------------------------------------

def test_gmi_integer_column_below_f0():
    """f0 = 0.5, integer entry 1.5 (f = 0.5 <= f0) gives coefficient 1."""
    cut = gmi_from_row(mkrow(0.5, [1.5], [True]))
    assert cut.rhs == -1.0
    np.testing.assert_allclose(cut.coefs, [-1.0])


def test_gmi_integer_column_above_f0():
    """f0 = 0.25, integer entry 0.75 (f > f0) gives (1-f)/(1-f0) = 1/3."""
    cut = gmi_from_row(mkrow(2.25, [0.75], [True]))
    np.testing.assert_allclose(-cut.coefs, [1.0 / 3.0])


def test_gmi_continuous_negative_column():
    """f0 = 0.25, continuous entry -2 gives 2/0.75 = 8/3."""
    cut = gmi_from_row(mkrow(0.25, [-2.0], [False]))
    np.testing.assert_allclose(-cut.coefs, [8.0 / 3.0])


def test_gmi_continuous_positive_column():
    cut = gmi_from_row(mkrow(0.25, [0.8], [False]))
    np.testing.assert_allclose(-cut.coefs, [0.8 / 0.25])


def test_weak_gmi_treats_integer_as_continuous():
    """Same 1.5-entry row: weak coefficient is 1.5/0.5 = 3 vs gmi's 1."""
    row = mkrow(0.5, [1.5], [True])
    np.testing.assert_allclose(-weak_gmi_from_row(row).coefs, [3.0])
    np.testing.assert_allclose(-gmi_from_row(row).coefs, [1.0])


def test_weak_equals_gmi_on_continuous_rows():
    row = mkrow(0.3, [1.25, -0.5, 2.0], [False, False, False])
    np.testing.assert_allclose(gmi_from_row(row).coefs,
                               weak_gmi_from_row(row).coefs)


def test_rhs_gate():
    with pytest.raises(RhsTooIntegral):
        gmi_from_row(mkrow(2.0 + 1e-6, [1.5], [True]), f0_min=1e-4)
    with pytest.raises(RhsTooIntegral):
        weak_gmi_from_row(mkrow(3.0 - 1e-6, [1.5], [True]), f0_min=1e-4)


def test_dynamism_gate():
    from splitbranch.errors import UnsafeCoefficients
    with pytest.raises(UnsafeCoefficients):
        gmi_from_row(mkrow(0.5, [1e-11, 0.5], [False, False]),
                     max_dynamism=1e8)


def test_efficacy_examples():
    cut = Cut(indices=[0, 1], coefs=[3.0, 4.0], rhs=1.0, space="original",
              gen_var=0, kind="gmi")
    assert efficacy(cut, np.array([1.0, 1.0])) == pytest.approx(1.2)
    assert efficacy(cut, np.array([1.0, -0.5])) == pytest.approx(0.0)
    lone = Cut(indices=[0], coefs=[1.0], rhs=0.0, space="original",
               gen_var=0, kind="gmi")
    assert efficacy(lone, np.array([-1.0, 0.0])) == pytest.approx(-1.0)


def test_elementary_split_examples():
    s = elementary_split(3, 2.3)
    assert s.pi0 == 2 and s.dense(5)[3] == 1
    s = elementary_split(0, -0.5)
    assert s.pi0 == -1
    with pytest.raises(NotFractional):
        elementary_split(1, 2.0)


# -- worked single-row instance ----------------------------------------------

def worked_instance():
    """max x0 with x0 + 1.5 x1 <= 0.5, integer box: tableau row 0.5 - 1.5 x1 - s."""
    return Milp(c=[-1, 0], rows=[[1, 1.5]], senses=[LE], rhs=[0.5],
                lb=[0, 0], ub=[10, 10], integer_set={0, 1})


def test_worked_example_row_and_cuts():
    p = worked_instance()
    sf = standardize(p)
    res = solve_lp(sf)
    assert res.value_of_original(sf, 0) == pytest.approx(0.5)
    row = tableau_row(res, sf.struct_col_of(0))
    assert row.rhs == pytest.approx(0.5)
    got = dict(zip(row.nb_cols.tolist(), row.coefs.tolist()))
    assert got[1] == pytest.approx(1.5)   # integer column
    assert got[2] == pytest.approx(1.0)   # slack column

    cut = gmi_from_row(row)
    coef = dict(zip(cut.indices.tolist(), (-cut.coefs).tolist()))
    assert coef[1] == pytest.approx(1.0)      # f = 0.5 <= f0 -> f/f0
    assert coef[2] == pytest.approx(2.0)      # continuous 1/0.5

    weak = weak_gmi_from_row(row)
    wcoef = dict(zip(weak.indices.tolist(), (-weak.coefs).tolist()))
    assert wcoef[1] == pytest.approx(3.0)
    assert wcoef[2] == pytest.approx(2.0)

    # nonbasic-space efficacy is 1/||gamma|| and strictly positive
    gnorm = np.linalg.norm(list(coef.values()))
    assert efficacy(cut, np.zeros(res.ws.n_work)) == pytest.approx(1.0 / gnorm)

    # structural space: slack substitution gives x0 + x1 <= 0
    std = to_structural_space(cut, sf, res)
    dense = std.dense(sf.n_struct)
    ratio = dense / dense[0]
    np.testing.assert_allclose(ratio, [1.0, 1.0])
    assert std.rhs / dense[0] == pytest.approx(0.0, abs=1e-12)
    # violation is preserved exactly
    x_std = res.x[: sf.n_struct]
    assert float(dense @ x_std - std.rhs) == pytest.approx(1.0, abs=1e-9)

    orig = to_original_space(std, sf)
    assert check_cut_validity(p, orig, tol=1e-6)

    split = split_of_gmi(row, sf, res)
    assert split.pi0 == 0
    d = split.dense(2)
    np.testing.assert_array_equal(d, [1, 1])
    assert split_is_lattice_free(split, p)


def test_split_with_only_continuous_nonbasics_is_elementary():
    """Continuous columns carry zero split entries, leaving e_j alone."""
    p = Milp(c=[-1, 0], rows=[[1, 0.7]], senses=[LE], rhs=[0.5],
             lb=[0, 0], ub=[10, 10], integer_set={0})
    sf = standardize(p)
    res = solve_lp(sf)
    row = tableau_row(res, sf.struct_col_of(0))
    split = split_of_gmi(row, sf, res)
    np.testing.assert_array_equal(split.dense(2), [1, 0])
    assert split.pi0 == 0
    elem = elementary_split(0, res.value_of_original(sf, 0))
    np.testing.assert_array_equal(elem.dense(2), split.dense(2))
    assert elem.pi0 == split.pi0


def test_split_coefficient_rounding_direction():
    """Entry 0.75 against f0 = 0.25 rounds up to 1 in the split vector."""
    p = Milp(c=[-1, 0], rows=[[1, 0.75]], senses=[LE], rhs=[0.25],
             lb=[0, 0], ub=[10, 10], integer_set={0, 1})
    sf = standardize(p)
    res = solve_lp(sf)
    row = tableau_row(res, sf.struct_col_of(0))
    split = split_of_gmi(row, sf, res)
    d = split.dense(2)
    assert d[0] == 1 and d[1] == 1  # ceil(0.75) since f = 0.75 > f0 = 0.25
    assert split_is_lattice_free(split, p)


def test_invalid_cut_detected():
    """x0 >= 1 on a knapsack containing the feasible point x = 0 is invalid."""
    p = Milp(c=[-5, -4, -3], rows=[[2, 3, 1]], senses=[LE], rhs=[5],
             lb=[0, 0, 0], ub=[1, 1, 1], integer_set={0, 1, 2})
    bad = Cut(indices=[0], coefs=[-1.0], rhs=-1.0, space="original",
              gen_var=0, kind="gmi")
    assert not check_cut_validity(p, bad)


def test_validity_pure_continuous_reduces_to_single_check():
    p = Milp(c=[-1, -1], rows=[[1, 1]], senses=[LE], rhs=[1.5],
             lb=[0, 0], ub=[1, 1])
    ok = Cut(indices=[0, 1], coefs=[1.0, 1.0], rhs=2.0, space="original",
             gen_var=0, kind="gmi")
    tight = Cut(indices=[0, 1], coefs=[1.0, 1.0], rhs=1.4, space="original",
                gen_var=0, kind="gmi")
    assert check_cut_validity(p, ok)
    assert not check_cut_validity(p, tight)


def test_validity_oracle_enumeration_cap():
    p = Milp(c=[0, 0], rows=np.zeros((0, 2)), senses=[], rhs=[],
             lb=[0, 0], ub=[2000, 2000], integer_set={0, 1})
    with pytest.raises(TooLargeToEnumerate):
        ValidityOracle(p, max_points=1e5)


def test_complemented_nonbasic_maps_back():
    """A variable at its upper bound is complemented; the map back flips it."""
    # max x0 + x1 with x0 + 0.5 x1 <= 1.2, x1 <= 1: optimum has x1 at upper
    p = Milp(c=[-1, -1], rows=[[1, 0.5]], senses=[LE], rhs=[1.2],
             lb=[0, 0], ub=[5, 1], integer_set={0, 1})
    sf = standardize(p)
    res = solve_lp(sf)
    assert res.value_of_original(sf, 1) == pytest.approx(1.0)
    col1 = sf.struct_col_of(1)
    assert res.basis.vstatus[col1] == 1  # at upper
    row = tableau_row(res, sf.struct_col_of(0))
    pos = row.nb_cols.tolist().index(col1)
    assert row.complemented[pos]
    cut = gmi_from_row(row)
    std = to_structural_space(cut, sf, res)
    x_std = res.x[: sf.n_struct]
    dense = std.dense(sf.n_struct)
    assert float(dense @ x_std - std.rhs) == pytest.approx(1.0, abs=1e-9)
    orig = to_original_space(std, sf)
    assert check_cut_validity(p, orig, tol=1e-6)


# -- properties over generated instances --------------------------------------

def _strict_expected(a, f0):
    fl = np.floor(a)
    f = a - fl
    if fl >= 1 or fl <= -2:
        return True
    if fl == 0:
        return f > f0
    return f < f0  # fl == -1


@pytest.mark.parametrize("family,params", [
    ("knapsack", dict(n=7)),
    ("setcover", dict(rows=10, cols=7)),
    ("mixed", dict(n=8, m=3)),
])
def test_root_cut_properties(family, params):
    """Validity, dominance, separation identity, split soundness, realism."""
    settings = Settings()
    checked = strict_rows = 0
    for seed in range(1, 13):
        p = generate_instance(family, seed, **params)
        sf = standardize(p)
        res = solve_lp(sf, settings=settings)
        if res.status != "optimal":
            continue
        oracle = ValidityOracle(p)
        from splitbranch.simplex import fractional_basics
        for j, _f in fractional_basics(res, sf, settings.int_tol):
            col = sf.struct_col_of(j)
            row = tableau_row(res, col)
            try:
                cut = gmi_from_row(row)
                weak = weak_gmi_from_row(row)
            except Exception:
                continue
            checked += 1
            # elementwise dominance in >= form, equality on continuous cols
            g = dict(zip(cut.indices.tolist(), (-cut.coefs).tolist()))
            w = dict(zip(weak.indices.tolist(), (-weak.coefs).tolist()))
            for pos in range(row.nb_cols.size):
                i = int(row.nb_cols[pos])
                gi, wi = g.get(i, 0.0), w.get(i, 0.0)
                assert 0.0 <= gi <= wi + 1e-9
                if not row.nb_int[pos]:
                    assert gi == pytest.approx(wi, abs=1e-12)
            # nonbasic-space efficacy identities
            zero = np.zeros(res.ws.n_work)
            e_g = efficacy(cut, zero)
            e_w = efficacy(weak, zero)
            assert e_g == pytest.approx(1.0 / cut.norm, abs=1e-9)
            assert e_g > 0 and e_w > 0
            assert e_g >= e_w - 1e-9
            # strengthening realism
            f0 = row.rhs - np.floor(row.rhs)
            expect_strict = any(
                _strict_expected(row.coefs[pos], f0)
                for pos in range(row.nb_cols.size) if row.nb_int[pos]
                and abs(row.coefs[pos]) > 1e-9
            )
            if expect_strict:
                strict_rows += 1
                assert any(g.get(i, 0.0) < w.get(i, 0.0) - 1e-12
                           for i in w)
            # validity of both cuts, in original space
            for c in (cut, weak):
                std = to_structural_space(c, sf, res)
                orig = to_original_space(std, sf)
                assert oracle.check(orig, tol=1e-6), (family, seed, j, c.kind)
                # structural-space efficacy positive at the LP point
                assert efficacy(std, res.x[: sf.n_struct]) > 0
            # split soundness
            split = split_of_gmi(row, sf, res)
            assert split_is_lattice_free(split, p), (family, seed, j)
            elem = elementary_split(j, res.value_of_original(sf, j))
            assert split_is_lattice_free(elem, p)
    assert checked >= 5
    if family != "setcover":
        assert strict_rows >= 1


def test_separate_round_integral_optimum_empty():
    p = Milp(c=[-1], rows=[[1]], senses=[LE], rhs=[1.0], lb=[0], ub=[2],
             integer_set={0})
    sf = standardize(p)
    res = solve_lp(sf)
    assert separate_round(sf, res, Settings()) == []


def test_separate_round_threshold_and_topn():
    p = generate_instance("setcover", 3)
    sf = standardize(p)
    res = solve_lp(sf)
    settings = Settings()
    full = separate_round(sf, res, settings)
    assert full, "expected cuts on a fractional set cover root"
    effs = [e for _c, e in full]
    assert effs == sorted(effs, reverse=True)
    assert all(e >= settings.eff_min for e in effs)

    one = Settings(cuts_per_round=1)
    top = separate_round(sf, res, one)
    assert len(top) == 1
    assert top[0][1] == pytest.approx(max(effs))

    high = Settings(eff_min=1e9)
    assert separate_round(sf, res, high) == []


def test_separate_round_deterministic():
    p = generate_instance("mixed", 5, n=9, m=4)
    sf = standardize(p)
    res = solve_lp(sf)
    a = separate_round(sf, res, Settings())
    b = separate_round(sf, res, Settings())
    assert [(tuple(c.indices), tuple(c.coefs), c.rhs, e) for c, e in a] == \
           [(tuple(c.indices), tuple(c.coefs), c.rhs, e) for c, e in b]
