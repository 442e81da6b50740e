"""Mixed-integer rounding cuts from tableau rows, and their split disjunctions.

Two cut families come out of a fractional tableau row: the strengthened
``gmi`` cut, where integer columns use their fractional parts partitioned
around the row fractionality, and the unstrengthened ``weak_gmi`` cut, where
every column is treated by the continuous-variable rule.  Both are derived in
the row-local ("nonbasic") space where every nonbasic variable is zero, then
mapped back to structural variables so they can be scored against the LP
optimum and appended to the relaxation.

The module also houses the exhaustive validity oracle used by the test tier:
it enumerates every integer assignment within bounds and maximizes the cut
activity over the continuous remainder.
"""

from __future__ import annotations

import dataclasses
import itertools

import numpy as np

from .config import Settings
from .errors import (
    NotFractional,
    NumericalFailure,
    RhsTooIntegral,
    TooLargeToEnumerate,
    UnsafeCoefficients,
    ZeroNorm,
)
from .model import GE, LE, Milp, StandardForm, standardize
from .simplex import (
    AT_UPPER,
    LpResult,
    TableauRow,
    fractional_basics,
    solve_lp,
    tableau_row,
)

GMI, WEAK_GMI = "gmi", "weak_gmi"


@dataclasses.dataclass(frozen=True)
class Cut:
    """Inequality ``coefs . x <= rhs`` over the tagged variable space.

    Cuts derived in >= form (both tableau families) are stored negated so a
    positive :func:`efficacy` always means "violated".
    """

    indices: np.ndarray
    coefs: np.ndarray
    rhs: float
    space: str                # nonbasic | standard | original
    gen_var: int              # original index of the generating basic variable
    kind: str                 # gmi | weak_gmi

    def __post_init__(self):
        object.__setattr__(self, "indices", np.asarray(self.indices, dtype=np.int64))
        object.__setattr__(self, "coefs", np.asarray(self.coefs, dtype=float))
        if self.indices.size == 0 or not np.any(self.coefs != 0.0):
            raise ZeroNorm("cut has no nonzero coefficients")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coefs))

    @property
    def support(self) -> int:
        return int(self.indices.size)

    def dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        out[self.indices] = self.coefs
        return out

    def standard_dense(self, sf: StandardForm) -> tuple[np.ndarray, float]:
        if self.space != "standard":
            raise ValueError("cut is not in standard structural space")
        return self.dense(sf.n_struct), self.rhs


@dataclasses.dataclass(frozen=True)
class SplitDisjunction:
    """Integral split pi.x <= pi0  OR  pi.x >= pi0 + 1 (original space)."""

    indices: np.ndarray
    coefs: np.ndarray         # int64, nonzero only on integer variables
    pi0: int

    def __post_init__(self):
        object.__setattr__(self, "indices", np.asarray(self.indices, dtype=np.int64))
        object.__setattr__(self, "coefs", np.asarray(self.coefs, dtype=np.int64))
        if self.indices.size == 0 or not np.any(self.coefs != 0):
            raise ValueError("split needs a nonzero integral vector")

    def dense(self, n: int) -> np.ndarray:
        out = np.zeros(n, dtype=np.int64)
        out[self.indices] = self.coefs
        return out


def _check_f0(rhs: float, f0_min: float) -> float:
    f0 = rhs - np.floor(rhs)
    if f0 < f0_min or f0 > 1.0 - f0_min:
        raise RhsTooIntegral(f"row fractionality {f0:.2e} outside gate")
    return float(f0)


def _finish_row_cut(row: TableauRow, gamma: np.ndarray, kind: str,
                    coef_drop: float, max_dynamism: float) -> Cut:
    keep = np.abs(gamma) > coef_drop
    if not keep.any():
        raise UnsafeCoefficients("cut support vanished")
    g = gamma[keep]
    if np.abs(g).max() / np.abs(g).min() > max_dynamism:
        raise UnsafeCoefficients("coefficient dynamism above cap")
    # derived as gamma . t >= 1; store canonical <= form
    return Cut(
        indices=row.nb_cols[keep],
        coefs=-g,
        rhs=-1.0,
        space="nonbasic",
        gen_var=row.basic_orig,
        kind=kind,
    )


def gmi_from_row(row: TableauRow, f0_min: float = 1e-4,
                 coef_drop: float = 1e-12, max_dynamism: float = 1e10) -> Cut:
    """Strengthened cut of a fractional tableau row.

    Integer columns contribute ``f_i/f0`` when their fractional part stays at
    or below the row fractionality ``f0`` and ``(1-f_i)/(1-f0)`` otherwise;
    continuous columns contribute ``a/f0`` for nonnegative entries and
    ``-a/(1-f0)`` for negative ones.  The right-hand side is 1 in >= form.

    Raises :class:`RhsTooIntegral` when f0 falls outside the gate; callers
    treat that as "skip this row".
    """
    f0 = _check_f0(row.rhs, f0_min)
    a = row.coefs
    gamma = np.empty_like(a)
    ints = row.nb_int
    f = a - np.floor(a)
    low = f <= f0
    gamma[ints & low] = f[ints & low] / f0
    gamma[ints & ~low] = (1.0 - f[ints & ~low]) / (1.0 - f0)
    cont = ~ints
    pos = a >= 0
    gamma[cont & pos] = a[cont & pos] / f0
    gamma[cont & ~pos] = -a[cont & ~pos] / (1.0 - f0)
    return _finish_row_cut(row, gamma, GMI, coef_drop, max_dynamism)


def weak_gmi_from_row(row: TableauRow, f0_min: float = 1e-4,
                      coef_drop: float = 1e-12, max_dynamism: float = 1e10) -> Cut:
    """Unstrengthened cut: every column treated by the continuous rule.

    This is the intersection cut of the elementary split on the row's basic
    variable, and is dominated by :func:`gmi_from_row` on the same row.
    """
    f0 = _check_f0(row.rhs, f0_min)
    a = row.coefs
    gamma = np.where(a >= 0, a / f0, -a / (1.0 - f0))
    return _finish_row_cut(row, gamma, WEAK_GMI, coef_drop, max_dynamism)


def efficacy(cut: Cut, x: np.ndarray) -> float:
    """Signed distance from ``x`` to the cut hyperplane; positive = violated."""
    x = np.asarray(x, dtype=float)
    act = float(cut.coefs @ x[cut.indices])
    return (act - cut.rhs) / cut.norm


def to_structural_space(cut: Cut, sf: StandardForm, res: LpResult) -> Cut:
    """Rewrite a row-local cut over the standard-form structural variables.

    Undoes the per-column shift/complement substitutions and replaces every
    slack by its defining row.  The absolute violation at the generating LP
    solution is preserved exactly; the norm (and hence efficacy) changes.
    """
    if cut.space != "nonbasic":
        raise ValueError("expected a row-local cut")
    ws = res.ws
    vstatus = res.basis.vstatus
    alpha = np.zeros(sf.n_struct)
    rhs = cut.rhs
    for idx, g in zip(cut.indices, cut.coefs):
        i = int(idx)
        at_up = vstatus[i] == AT_UPPER
        sign = -1.0 if at_up else 1.0
        bound = res.ub[i] if at_up else res.lb[i]
        w = g * sign
        rhs += w * bound
        if i in ws.slack_def:
            a_def, b_def = ws.slack_def[i]
            alpha -= w * a_def
            rhs -= w * b_def
        else:
            alpha[i] += w
    keep = np.nonzero(np.abs(alpha) > 1e-12)[0]
    return Cut(
        indices=keep,
        coefs=alpha[keep],
        rhs=float(rhs),
        space="standard",
        gen_var=cut.gen_var,
        kind=cut.kind,
    )


def to_original_space(cut: Cut, sf: StandardForm) -> Cut:
    """Rewrite a structural-space cut over the original variables."""
    if cut.space != "standard":
        raise ValueError("expected a structural-space cut")
    alpha = np.zeros(sf.base.n_vars)
    rhs = cut.rhs
    for idx, g in zip(cut.indices, cut.coefs):
        origin = sf.var_map[int(idx)]
        alpha[origin.index] += g * origin.sign
        rhs += g * origin.sign * origin.offset
    keep = np.nonzero(np.abs(alpha) > 1e-12)[0]
    return Cut(
        indices=keep,
        coefs=alpha[keep],
        rhs=float(rhs),
        space="original",
        gen_var=cut.gen_var,
        kind=cut.kind,
    )


def elementary_split(j: int, lp_value: float, int_tol: float = 1e-6) -> SplitDisjunction:
    """Single-variable disjunction x_j <= floor(v) OR x_j >= floor(v) + 1."""
    frac = lp_value - np.floor(lp_value)
    if frac <= int_tol or frac >= 1.0 - int_tol:
        raise NotFractional(f"value {lp_value} is integral within tolerance")
    return SplitDisjunction(np.array([j]), np.array([1]), int(np.floor(lp_value)))


def split_of_gmi(row: TableauRow, sf: StandardForm, res: LpResult,
                 f0_min: float = 1e-4) -> SplitDisjunction:
    """The split disjunction underlying the strengthened cut of ``row``.

    Integer nonbasic columns carry the floor of their tableau entry when the
    entry's fractional part stays at or below the row fractionality and the
    ceiling otherwise; the generating basic variable carries 1.  The result
    is mapped back to original variables (shifts and complements contribute
    only integral adjustments, so the vector stays integral).
    """
    f0 = _check_f0(row.rhs, f0_min)
    ws = res.ws
    vstatus = res.basis.vstatus

    coefs = np.zeros(sf.base.n_vars)
    pi0 = float(np.floor(row.rhs))

    def add_std_term(col: int, c: float):
        # standard structural x relates to original x by x = off + sign * x'
        nonlocal pi0
        origin = sf.var_map[col]
        if origin.kind != "struct":
            raise AssertionError("split term on a slack column")
        coefs[origin.index] += c * origin.sign
        pi0 += c * origin.sign * origin.offset

    add_std_term(row.basic_col, 1.0)
    for pos in range(row.nb_cols.size):
        if not row.nb_int[pos]:
            continue
        a = row.coefs[pos]
        f = a - np.floor(a)
        ct = np.floor(a) if f <= f0 else np.ceil(a)
        if ct == 0:
            continue
        i = int(row.nb_cols[pos])
        at_up = vstatus[i] == AT_UPPER
        sign = -1.0 if at_up else 1.0
        bound = res.ub[i] if at_up else res.lb[i]
        # t = sign * (x_std - bound): coefficient ct on t becomes ct*sign on
        # x_std and shifts pi0 by ct*sign*bound
        pi0 += ct * sign * bound
        add_std_term(i, ct * sign)

    rounded = np.rint(coefs)
    if np.abs(coefs - rounded).max(initial=0.0) > 1e-6 or abs(pi0 - round(pi0)) > 1e-6:
        raise AssertionError("split vector failed to come out integral")
    keep = np.nonzero(rounded != 0)[0]
    return SplitDisjunction(keep, rounded[keep].astype(np.int64), int(round(pi0)))


def split_is_lattice_free(split: SplitDisjunction, p: Milp,
                          max_points: float = 1e6) -> bool:
    """Enumerate the integer box: no point sits strictly inside the strip."""
    grid = _integer_grid(p, max_points)
    if grid.size == 0:
        return True
    pi = split.dense(p.n_vars).astype(float)
    vals = grid @ pi[sorted(p.integer_set)]
    inside = (vals > split.pi0 + 1e-9) & (vals < split.pi0 + 1 - 1e-9)
    return not bool(inside.any())


# -- validity oracle ----------------------------------------------------------

def _integer_grid(p: Milp, max_points: float) -> np.ndarray:
    """All integer assignments within bounds, one row per point."""
    J = sorted(p.integer_set)
    axes = []
    total = 1
    for j in J:
        lo, hi = p.lb[j], p.ub[j]
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise TooLargeToEnumerate(f"integer variable {j} unbounded")
        axis = np.arange(np.ceil(lo - 1e-9), np.floor(hi + 1e-9) + 1)
        total *= max(axis.size, 1)
        if total > max_points:
            raise TooLargeToEnumerate(f"integer grid above {max_points:g} points")
        axes.append(axis)
    if not J:
        return np.zeros((1, 0))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _polytope_vertices(A, senses, b, lb, ub, tol=1e-9):
    """Vertices of {x : rows, box} by active-set enumeration (small dims)."""
    n = lb.size
    cons = []              # (a, rhs, is_eq)
    for a, s, d in zip(A, senses, b):
        if s == LE:
            cons.append((a, d, False))
        elif s == GE:
            cons.append((-a, -d, False))
        else:
            cons.append((a, d, True))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        if np.isfinite(ub[j]):
            cons.append((e.copy(), ub[j], False))
        if np.isfinite(lb[j]):
            cons.append((-e, -lb[j], False))
    verts = []
    for combo in itertools.combinations(range(len(cons)), n):
        M = np.array([cons[i][0] for i in combo])
        d = np.array([cons[i][1] for i in combo])
        try:
            x = np.linalg.solve(M, d)
        except np.linalg.LinAlgError:
            continue
        ok = all(c[0] @ x <= c[1] + 1e-7 for c in cons)
        ok = ok and all(abs(c[0] @ x - c[1]) <= 1e-7 for c in cons if c[2])
        if ok:
            verts.append(x)
    if not verts:
        return np.zeros((0, n))
    V = np.array(verts)
    keys = np.round(V / tol).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    return V[np.sort(first)]


class ValidityOracle:
    """Exhaustive check that a cut removes no integer-feasible point.

    For instances whose variables all carry finite bounds the oracle builds,
    once, the full cloud of candidate maximizers: every feasible integer
    assignment crossed with the vertices of its continuous slice.  A cut is
    then valid iff its maximum activity over the cloud stays at or below the
    right-hand side.  When some continuous variable is unbounded the oracle
    falls back to one LP maximization per integer assignment.
    """

    def __init__(self, p: Milp, max_points: float = 1e6, settings: Settings | None = None):
        self.p = p
        self.settings = settings or Settings()
        self.max_points = max_points
        self.J = sorted(p.integer_set)
        self.C = [j for j in range(p.n_vars) if j not in p.integer_set]
        self.grid = _integer_grid(p, max_points)
        self._boxed = all(
            np.isfinite(p.lb[j]) and np.isfinite(p.ub[j]) for j in self.C
        )
        self._cloud = self._build_cloud() if self._boxed else None

    def _build_cloud(self) -> np.ndarray:
        p = self.p
        points = []
        if not self.C:
            x = np.zeros((self.grid.shape[0], p.n_vars))
            x[:, self.J] = self.grid
            lhs = x @ p.rows.T
            ok = np.ones(x.shape[0], dtype=bool)
            for k, s in enumerate(p.senses):
                if s == LE:
                    ok &= lhs[:, k] <= p.rhs[k] + 1e-7
                elif s == GE:
                    ok &= lhs[:, k] >= p.rhs[k] - 1e-7
                else:
                    ok &= np.abs(lhs[:, k] - p.rhs[k]) <= 1e-7
            return x[ok]
        A_J = p.rows[:, self.J]
        A_C = p.rows[:, self.C]
        for assign in self.grid:
            rhs = p.rhs - A_J @ assign
            V = _polytope_vertices(
                A_C, p.senses, rhs, p.lb[self.C], p.ub[self.C]
            )
            for v in V:
                x = np.zeros(p.n_vars)
                x[self.J] = assign
                x[self.C] = v
                points.append(x)
        return np.array(points) if points else np.zeros((0, p.n_vars))

    def check(self, cut: Cut, tol: float = 1e-6,
              bound_overrides: dict[int, tuple[float, float]] | None = None) -> bool:
        """Validity of ``cut`` for the instance, or for a subproblem of it.

        ``bound_overrides`` restricts variables to tighter intervals (the
        branching boxes of a node); cuts derived at a node are valid for
        that node's subproblem rather than for the whole instance.
        """
        if cut.space != "original":
            raise ValueError("validity oracle needs an original-space cut")
        alpha = cut.dense(self.p.n_vars)
        if self._cloud is not None:
            cloud = self._cloud
            if bound_overrides:
                mask = np.ones(cloud.shape[0], dtype=bool)
                for j, (lo, hi) in bound_overrides.items():
                    mask &= (cloud[:, j] >= lo - 1e-9) & (cloud[:, j] <= hi + 1e-9)
                cloud = cloud[mask]
            if cloud.shape[0] == 0:
                return True
            return float((cloud @ alpha).max()) <= cut.rhs + tol
        return self._check_via_lp(alpha, cut.rhs, tol, bound_overrides or {})

    def _check_via_lp(self, alpha, rhs, tol, overrides) -> bool:
        p = self.p
        for assign in self.grid:
            lb = p.lb.copy()
            ub = p.ub.copy()
            for j, (lo, hi) in overrides.items():
                lb[j] = max(lb[j], lo)
                ub[j] = min(ub[j], hi)
            lb[self.J] = np.maximum(lb[self.J], assign)
            ub[self.J] = np.minimum(ub[self.J], assign)
            if np.any(lb > ub):
                continue
            sub = Milp(-alpha, p.rows, p.senses, p.rhs, lb, ub,
                       integer_set=frozenset(), name="validity-sub")
            res = solve_lp(standardize(sub), settings=self.settings)
            if res.status == "infeasible":
                continue
            if res.status == "unbounded":
                return False
            if res.status != "optimal":
                raise NumericalFailure("validity LP subproblem did not converge")
            if -res.objective > rhs + tol:
                return False
        return True


def check_cut_validity(p: Milp, cut: Cut, tol: float = 1e-6,
                       max_points: float = 1e6) -> bool:
    """One-shot validity check; see :class:`ValidityOracle`."""
    return ValidityOracle(p, max_points).check(cut, tol)


# -- per-round separation -----------------------------------------------------

@dataclasses.dataclass
class GeneratedCut:
    gen_var: int
    cut_std: Cut
    cut_nb: Cut
    eff: float                # efficacy in the configured scoring space


def generate_gmi_cuts(sf: StandardForm, res: LpResult,
                      settings: Settings) -> list[GeneratedCut]:
    """One strengthened cut attempt per fractional basic integer row."""
    out = []
    for j, _f in fractional_basics(res, sf, settings.int_tol):
        col = sf.struct_col_of(j)
        try:
            row = tableau_row(res, col, settings.coef_drop)
            cut_nb = gmi_from_row(row, settings.f0_min, settings.coef_drop,
                                  settings.max_dynamism)
            cut_std = to_structural_space(cut_nb, sf, res)
        except (RhsTooIntegral, UnsafeCoefficients, ZeroNorm):
            continue
        if settings.eff_space == "nonbasic":
            eff = efficacy(cut_nb, np.zeros(res.ws.n_work))
        else:
            eff = efficacy(cut_std, res.x[: sf.n_struct])
        if settings.cut_sink is not None:
            settings.cut_sink(cut_std, None)
        out.append(GeneratedCut(j, cut_std, cut_nb, eff))
    return out


def select_cuts(raws: list[GeneratedCut], settings: Settings) -> list[GeneratedCut]:
    kept = [g for g in raws if g.eff >= settings.eff_min]
    kept.sort(key=lambda g: (-g.eff, g.gen_var))
    return kept[: settings.cuts_per_round]


def separate_round(sf: StandardForm, res: LpResult,
                   settings: Settings | None = None) -> list[tuple[Cut, float]]:
    """Top-N strengthened cuts by efficacy at the current LP optimum.

    Rows gated out (near-integral rhs, unsafe coefficients) contribute
    nothing; ties in efficacy break toward the lower generating variable
    index.  Deterministic for identical inputs.
    """
    settings = settings or Settings()
    raws = generate_gmi_cuts(sf, res, settings)
    return [(g.cut_std, g.eff) for g in select_cuts(raws, settings)]
