"""Bounded-variable primal simplex over the standard form.

The driver keeps an explicit dense basis inverse, refreshed from scratch
every ``refactor_every`` pivots and whenever numerical trouble shows up.
Entering-variable pricing is Dantzig with an automatic switch to Bland's
rule after a run of degenerate pivots, which guarantees termination.  The
per-iteration heavy lifting (pricing, ratio test, rank-1 inverse update)
lives in the :mod:`splitbranch._kernels` backends.

Infeasibility is handled by a single-artificial-per-row phase 1; warm
starts reuse a caller-supplied basis when it is still primal feasible and
otherwise fall back to a cold start seeded with the old nonbasic statuses.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from . import _kernels
from .config import Settings
from .errors import NotBasic, NumericalFailure
from .model import StandardForm

AT_LOWER, AT_UPPER, BASIC = 0, 1, 2

_D_EPS = 1e-9        # reduced-cost optimality threshold
_PIV_EPS = 1e-9      # ratio-test direction threshold
_STEP_EPS = 1e-12    # below this a pivot counts as degenerate
_WARM_TOL = 1e-7


@dataclasses.dataclass
class Basis:
    """Snapshot of a simplex basis: basic columns plus nonbasic statuses.

    Indices live in the extended column space (structural variables, slacks,
    cut slacks, then one artificial per row); ``art_sigma`` remembers the
    sign each artificial column carried so the basis can be re-factorized.
    """

    basic: np.ndarray        # (m,) int64
    vstatus: np.ndarray      # (n_cols + m,) int8
    art_sigma: np.ndarray    # (m,) float

    def copy(self) -> "Basis":
        return Basis(self.basic.copy(), self.vstatus.copy(), self.art_sigma.copy())


@dataclasses.dataclass
class TableauRow:
    """One simplex row: basic variable expressed in the nonbasic variables.

    The row is translated so every nonbasic local variable is zero at the
    current vertex: nonbasics at a lower bound are shifted, nonbasics at an
    upper bound are complemented (flag set).  ``rhs`` therefore equals the
    basic variable's value, and for any LP point the identity
    ``x[basic] = rhs - coef . t`` holds with ``t`` the local variables.
    """

    basic_col: int
    basic_orig: int          # original variable index (-1 for slack rows)
    rhs: float
    nb_cols: np.ndarray      # working-LP column indices
    coefs: np.ndarray        # coefficients against the local variables
    complemented: np.ndarray  # bool: nonbasic sat at its upper bound
    nb_bound: np.ndarray     # bound value each nonbasic sits at
    nb_int: np.ndarray       # bool: column is an integer variable


@dataclasses.dataclass
class LpResult:
    status: str              # optimal | infeasible | unbounded | iteration_limit
    objective: float         # includes the standard-form objective offset
    x: np.ndarray | None     # working-LP values (no artificials)
    basis: Basis | None
    iterations: int
    ws: "LpWorkspace"
    lb: np.ndarray | None = None   # bound arrays the solve ran with
    ub: np.ndarray | None = None
    binv: np.ndarray | None = None

    def value_of_original(self, sf: StandardForm, j: int) -> float:
        origin = sf.var_map[sf.struct_col_of(j)]
        return origin.offset + origin.sign * self.x[sf.struct_col_of(j)]

    def x_original(self, sf: StandardForm) -> np.ndarray:
        return sf.to_original(self.x[: sf.n_cols])


class LpWorkspace:
    """Immutable row/column data for one LP (standard form plus cut rows).

    One workspace is shared by every node of a branch-and-bound run; only
    the bound arrays change per solve.  Artificial columns occupy the last
    ``m`` slots of the matrix and are rewritten per solve, so a workspace
    serves one solve at a time; concurrent solves need their own workspace.
    """

    def __init__(self, sf: StandardForm, cuts=(), settings: Settings | None = None):
        settings = settings or Settings()
        self.sf = sf
        self.cuts = tuple(cuts)
        n_sf = sf.n_cols
        m = sf.n_rows + len(self.cuts)
        n_work = n_sf + len(self.cuts)

        A = np.zeros((m, n_work + m))
        A[: sf.n_rows, :n_sf] = sf.A
        b = np.empty(m)
        b[: sf.n_rows] = sf.b
        for r, cut in enumerate(self.cuts):
            alpha, beta = cut.standard_dense(sf)
            row = sf.n_rows + r
            A[row, : sf.n_struct] = alpha
            A[row, n_sf + r] = 1.0
            b[row] = beta

        if settings.row_equilibrate:
            scale = np.abs(A[:, : n_work]).max(axis=1)
            scale[scale == 0] = 1.0
            A[:, :n_work] /= scale[:, None]
            b /= scale

        self.A = A
        self.b = b
        self.m = m
        self.n_work = n_work
        self.c = np.concatenate([sf.c, np.zeros(len(self.cuts))])
        self.int_mask = np.concatenate(
            [sf.int_mask, np.zeros(len(self.cuts), dtype=bool)]
        )
        self.obj_offset = sf.obj_offset

        # original-variable identity per structural column, -1 elsewhere
        self.col_orig = np.full(n_work, -1, dtype=np.int64)
        for col, origin in enumerate(sf.var_map):
            if origin.kind == "struct":
                self.col_orig[col] = origin.index

        # slack columns expressed over structural variables: s = rhs - a.x
        self.slack_def: dict[int, tuple[np.ndarray, float]] = {}
        for col, origin in enumerate(sf.var_map):
            if origin.kind == "slack":
                k = origin.index
                self.slack_def[col] = (sf.A[k, : sf.n_struct].copy(), float(sf.b[k]))
        for r, cut in enumerate(self.cuts):
            alpha, beta = cut.standard_dense(sf)
            self.slack_def[n_sf + r] = (alpha, beta)

    def base_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lb = np.zeros(self.n_work)
        ub = np.concatenate([self.sf.ub, np.full(len(self.cuts), np.inf)])
        return lb, ub

    def migrate_basis(self, basis: Basis, old_ws: "LpWorkspace") -> Basis:
        """Re-index a basis from a workspace with fewer cut rows.

        New cut rows get their own slack as the basic variable, which keeps
        the extended basis invertible; artificial indices shift to make room
        for the new slack columns.
        """
        old_n = old_ws.n_work
        dk = self.n_work - old_n
        basic = basis.basic.copy()
        basic[basic >= old_n] += dk
        new_slacks = np.arange(old_n, old_n + dk, dtype=np.int64)
        basic = np.concatenate([basic, new_slacks])

        vstatus = np.full(self.n_work + self.m, AT_LOWER, dtype=np.int8)
        vstatus[:old_n] = basis.vstatus[:old_n]
        vstatus[new_slacks] = BASIC
        vstatus[self.n_work : self.n_work + old_ws.m] = basis.vstatus[old_n:]
        sigma = np.concatenate([basis.art_sigma, np.ones(dk)])
        return Basis(basic, vstatus, sigma)


class _Solve:
    """Mutable state for one LP solve over a workspace."""

    def __init__(self, ws: LpWorkspace, lb: np.ndarray, ub: np.ndarray, settings: Settings):
        self.ws = ws
        self.settings = settings
        m, n_work = ws.m, ws.n_work
        self.n_tot = n_work + m
        self.lb = np.concatenate([lb, np.zeros(m)])
        self.ub = np.concatenate([ub, np.full(m, np.inf)])
        self.cost2 = np.concatenate([ws.c, np.zeros(m)])
        self.cost1 = np.zeros(self.n_tot)
        self.cost1[n_work:] = 1.0
        gaps = self.ub[:n_work] - self.lb[:n_work]
        self.eligible_col = (gaps > 0).astype(np.uint8)
        self.vstatus = np.full(self.n_tot, AT_LOWER, dtype=np.int8)
        self.basic = np.empty(m, dtype=np.int64)
        self.binv = np.empty((m, m))
        self.xb = np.empty(m)
        self.art_sigma = np.ones(m)
        self.iterations = 0
        self._pivots = 0
        self._degen = 0
        self._bland = False

    # -- starts ---------------------------------------------------------

    def _nonbasic_values(self) -> np.ndarray:
        x = np.where(self.vstatus[: self.n_tot] == AT_UPPER, self.ub, self.lb)
        x[self.vstatus == BASIC] = 0.0
        return x

    def _write_artificials(self):
        m, n_work = self.ws.m, self.ws.n_work
        self.ws.A[:, n_work:] = 0.0
        self.ws.A[np.arange(m), n_work + np.arange(m)] = self.art_sigma

    def refactor(self) -> bool:
        self._write_artificials()
        B = self.ws.A[:, self.basic]
        try:
            self.binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            return False
        x = self._nonbasic_values()
        r = self.ws.b - self.ws.A @ x
        self.xb = self.binv @ r
        return True

    def cold_start(self, nb_hint: np.ndarray | None = None):
        m, n_work = self.ws.m, self.ws.n_work
        self.ub[n_work:] = np.inf   # reopen artificials pinned by a failed warm start
        self.vstatus[:] = AT_LOWER
        if nb_hint is not None:
            for col in range(min(nb_hint.size, n_work)):
                if nb_hint[col] == AT_UPPER and np.isfinite(self.ub[col]):
                    self.vstatus[col] = AT_UPPER
        x = self._nonbasic_values()
        resid = self.ws.b - self.ws.A[:, :n_work] @ x[:n_work]
        self.art_sigma = np.where(resid >= 0, 1.0, -1.0)
        self.basic = np.arange(n_work, n_work + m, dtype=np.int64)
        self.vstatus[n_work:] = BASIC
        self._write_artificials()
        self.binv = np.diag(self.art_sigma).copy()
        self.xb = np.abs(resid)

    def try_warm(self, start: Basis) -> bool:
        m, n_work = self.ws.m, self.ws.n_work
        if start.basic.size != m or start.vstatus.size != self.n_tot:
            return False
        self.basic = start.basic.copy()
        self.vstatus = start.vstatus.copy()
        self.art_sigma = start.art_sigma.copy()
        # a warm start skips phase 1, so artificials are pinned to zero now;
        # one may carry an at-upper status from the previous solve
        self.pin_artificials()
        # a hinted upper-bound status is invalid if that bound became infinite
        bad = (self.vstatus[:n_work] == AT_UPPER) & ~np.isfinite(self.ub[:n_work])
        if bad.any():
            return False
        if not self.refactor():
            return False
        lo = self.lb[self.basic]
        hi = self.ub[self.basic]
        if np.any(self.xb < lo - _WARM_TOL) or np.any(self.xb > hi + _WARM_TOL):
            return False
        return True

    # -- main loop ------------------------------------------------------

    def optimize(self, phase1: bool) -> str:
        K = _kernels.get_backend()
        ws = self.ws
        costs = self.cost1 if phase1 else self.cost2
        eligible_full = np.concatenate(
            [self.eligible_col, np.zeros(ws.m, dtype=np.uint8)]
        )
        limit = self.settings.lp_iter_limit
        refactor_every = self.settings.refactor_every

        while True:
            if self.iterations >= limit:
                return "iteration_limit"
            self.iterations += 1

            nb_idx = np.nonzero(self.vstatus != BASIC)[0].astype(np.int64)
            at_upper = (self.vstatus[nb_idx] == AT_UPPER).astype(np.uint8)
            eligible = eligible_full[nb_idx]
            cb = np.ascontiguousarray(costs[self.basic])
            y = np.asarray(K.btran(self.binv, cb))

            pos, _d = K.price(costs, ws.A, y, nb_idx, at_upper,
                              np.ascontiguousarray(eligible), _D_EPS, self._bland)
            if pos < 0:
                return "optimal"
            q = int(nb_idx[pos])
            from_lower = self.vstatus[q] == AT_LOWER

            col = np.ascontiguousarray(ws.A[:, q])
            alpha = np.asarray(K.ftran(self.binv, col))
            abar = alpha if from_lower else -alpha
            gap_q = self.ub[q] - self.lb[q]

            row, step, to_upper = K.ratio_test(
                abar, self.xb,
                np.ascontiguousarray(self.lb[self.basic]),
                np.ascontiguousarray(self.ub[self.basic]),
                self.basic, gap_q, _PIV_EPS,
            )
            if row == -2:
                return "unbounded"

            if step <= _STEP_EPS:
                self._degen += 1
                if self._degen >= self.settings.bland_after:
                    self._bland = True
            else:
                self._degen = 0

            if row == -1:
                # bound flip: no basis change
                self.xb -= step * abar
                self.vstatus[q] = AT_UPPER if from_lower else AT_LOWER
                continue

            leaving = int(self.basic[row])
            self.xb -= step * abar
            entering_val = (self.lb[q] + step) if from_lower else (self.ub[q] - step)
            K.update_binv(self.binv, alpha, row)
            self.basic[row] = q
            self.vstatus[q] = BASIC
            self.vstatus[leaving] = AT_UPPER if to_upper else AT_LOWER
            self.xb[row] = entering_val

            self._pivots += 1
            if self._pivots % refactor_every == 0:
                if not self.refactor():
                    raise NumericalFailure("singular basis during refactorization")

    # -- results --------------------------------------------------------

    def full_x(self) -> np.ndarray:
        x = self._nonbasic_values()
        x[self.basic] = self.xb
        return x

    def phase1_sum(self) -> float:
        return float(self.cost1 @ self.full_x())

    def pin_artificials(self):
        self.ub[self.ws.n_work:] = 0.0


def solve_ws(
    ws: LpWorkspace,
    lb: np.ndarray,
    ub: np.ndarray,
    settings: Settings | None = None,
    start: Basis | None = None,
) -> LpResult:
    """Solve the LP min c.x s.t. ws rows, lb <= x <= ub."""
    settings = settings or Settings()
    if np.any(lb > ub + settings.feas_tol):
        return LpResult("infeasible", np.inf, None, None, 0, ws)

    st = _Solve(ws, lb, ub, settings)
    warm = start is not None and st.try_warm(start)
    if not warm:
        hint = start.vstatus if start is not None else None
        st.cold_start(nb_hint=hint)
        status = st.optimize(phase1=True)
        if status == "unbounded":
            raise NumericalFailure("phase 1 reported unbounded")
        if status != "optimal":
            return LpResult(status, np.nan, None, None, st.iterations, ws)
        scale = 1.0 + float(np.abs(ws.b).max(initial=0.0))
        if st.phase1_sum() > settings.feas_tol * scale:
            return LpResult("infeasible", np.inf, None, None, st.iterations, ws)
    st.pin_artificials()

    status = st.optimize(phase1=False)
    if status == "unbounded":
        return LpResult("unbounded", -np.inf, None, None, st.iterations, ws)
    if status != "optimal":
        return LpResult(status, np.nan, None, None, st.iterations, ws)

    # numerical acceptance: equality residual at the claimed optimum
    for attempt in range(2):
        x = st.full_x()
        resid = float(np.abs(ws.A[:, : st.n_tot] @ x - ws.b).max(initial=0.0))
        if resid <= 1e-7:
            break
        if attempt == 0:
            if not st.refactor():
                raise NumericalFailure("singular basis during refactorization")
            if st.optimize(phase1=False) != "optimal":
                raise NumericalFailure("re-optimization after refactor failed")
        else:
            raise NumericalFailure(f"equality residual {resid:.2e} above tolerance")

    x_work = x[: ws.n_work].copy()
    obj = float(st.cost2 @ x) + ws.obj_offset
    basis = Basis(st.basic.copy(), st.vstatus.copy(), st.art_sigma.copy())
    return LpResult(
        "optimal", obj, x_work, basis, st.iterations, ws,
        lb=st.lb[: ws.n_work].copy(), ub=st.ub[: ws.n_work].copy(),
        binv=st.binv.copy(),
    )


def solve_lp(
    sf: StandardForm,
    extra_cuts=(),
    bound_overrides: dict[int, tuple[float, float]] | None = None,
    start: Basis | None = None,
    settings: Settings | None = None,
) -> LpResult:
    """Convenience wrapper: build a workspace and solve.

    ``bound_overrides`` maps original variable indices to (lo, hi) intervals
    intersected with the variable's existing bounds.
    """
    settings = settings or Settings()
    ws = LpWorkspace(sf, extra_cuts, settings)
    lb, ub = ws.base_bounds()
    apply_overrides(sf, lb, ub, bound_overrides or {})
    return solve_ws(ws, lb, ub, settings, start=start)


def apply_overrides(sf: StandardForm, lb, ub, overrides: dict[int, tuple[float, float]]):
    """Intersect original-space bound overrides into standard-space arrays."""
    for j, (lo, hi) in overrides.items():
        col, slo, shi = sf.bounds_to_std(j, lo, hi)
        lb[col] = max(lb[col], slo)
        ub[col] = min(ub[col], shi)


def tableau_row(res: LpResult, col_j: int, coef_drop: float = 1e-12) -> TableauRow:
    """Extract the simplex row of basic working column ``col_j``.

    Raises :class:`NotBasic` when the column is not in the basis.
    """
    if res.status != "optimal":
        raise ValueError("tableau rows require an optimal LP result")
    basis = res.basis
    if basis.vstatus[col_j] != BASIC:
        raise NotBasic(f"column {col_j} is not basic")
    r = int(np.nonzero(basis.basic == col_j)[0][0])

    ws = res.ws
    w = res.binv[r] @ ws.A[:, : ws.n_work]
    rhs = float(res.x[col_j])

    nb_cols, coefs, compl_flags, bounds, ints = [], [], [], [], []
    for i in np.nonzero(np.abs(w) > coef_drop)[0]:
        stat = basis.vstatus[i]
        if stat == BASIC:
            continue
        at_up = stat == AT_UPPER
        nb_cols.append(i)
        coefs.append(-w[i] if at_up else w[i])
        compl_flags.append(at_up)
        bounds.append(res.ub[i] if at_up else res.lb[i])
        ints.append(bool(ws.int_mask[i]))

    return TableauRow(
        basic_col=int(col_j),
        basic_orig=int(ws.col_orig[col_j]) if col_j < ws.n_work else -1,
        rhs=rhs,
        nb_cols=np.array(nb_cols, dtype=np.int64),
        coefs=np.array(coefs, dtype=float),
        complemented=np.array(compl_flags, dtype=bool),
        nb_bound=np.array(bounds, dtype=float),
        nb_int=np.array(ints, dtype=bool),
    )


def fractional_basics(
    res: LpResult, sf: StandardForm, int_tol: float = 1e-6
) -> list[tuple[int, float]]:
    """Integer original variables with fractional LP value, sorted by index.

    Returns ``(original index, fractional part)`` pairs; the fractional part
    lies strictly inside ``(int_tol, 1 - int_tol)``.
    """
    if res.status != "optimal":
        raise ValueError("fractional candidates require an optimal LP result")
    out = []
    for j in sorted(sf.base.integer_set):
        v = res.value_of_original(sf, j)
        frac = v - np.floor(v)
        if int_tol < frac < 1.0 - int_tol:
            out.append((j, float(frac)))
    return out
