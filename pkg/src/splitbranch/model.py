"""Problem representation and the equality / x >= 0 transformation.

A :class:`Milp` is the user-facing form: rows with <=, =, >= senses, general
bounds, and a set of integer variable indices.  :func:`standardize` rewrites
it into equality rows over nonnegative variables (slacks added to inequality
rows, variables shifted or negated so every lower bound is zero), which is
the form the simplex core and the cut derivations operate on.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .errors import FreeVariableUnsupported, InconsistentBounds

LE, EQ, GE = "<=", "==", ">="
SENSES = (LE, EQ, GE)


@dataclasses.dataclass(frozen=True)
class Milp:
    """Mixed-integer linear program, minimization.

    minimize c.x  subject to  a_k.x (sense_k) b_k,  l <= x <= u,
    x_j integral for j in integer_set.
    """

    c: np.ndarray
    rows: np.ndarray          # (m, n) coefficient matrix
    senses: tuple[str, ...]   # one of SENSES per row
    rhs: np.ndarray           # (m,)
    lb: np.ndarray            # (n,) may contain -inf
    ub: np.ndarray            # (n,) may contain +inf
    integer_set: frozenset[int] = frozenset()
    name: str = "milp"

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        rows = np.asarray(self.rows, dtype=float).reshape(-1, c.size)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "rhs", np.asarray(self.rhs, dtype=float))
        object.__setattr__(self, "lb", np.asarray(self.lb, dtype=float))
        object.__setattr__(self, "ub", np.asarray(self.ub, dtype=float))
        object.__setattr__(self, "senses", tuple(self.senses))
        object.__setattr__(self, "integer_set", frozenset(int(j) for j in self.integer_set))

        n = self.n_vars
        if not (self.rhs.size == len(self.senses) == self.rows.shape[0]):
            raise ValueError("row/sense/rhs sizes disagree")
        if self.lb.size != n or self.ub.size != n:
            raise ValueError("bound length mismatch")
        if any(s not in SENSES for s in self.senses):
            raise ValueError(f"unknown sense, expected one of {SENSES}")
        if not np.all(np.isfinite(self.c)) or not np.all(np.isfinite(self.rows)):
            raise ValueError("coefficients must be finite")
        if not np.all(np.isfinite(self.rhs)):
            raise ValueError("right-hand sides must be finite")
        for j in self.integer_set:
            if not 0 <= j < n:
                raise ValueError(f"integer index {j} out of range")
            if not (np.isfinite(self.lb[j]) or np.isfinite(self.ub[j])):
                raise ValueError(f"integer variable {j} needs one finite bound")

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    def bounds_consistent(self) -> bool:
        """False when some l_j > u_j; such instances are infeasible."""
        return bool(np.all(self.lb <= self.ub))


@dataclasses.dataclass(frozen=True)
class VarOrigin:
    """How one standard-form variable maps back to the original space.

    Structural columns satisfy ``x_orig = offset + sign * x_std``; slack
    columns record the constraint row they close.
    """

    kind: str                 # "struct" or "slack"
    index: int                # original variable index, or constraint row
    sign: float = 1.0
    offset: float = 0.0


@dataclasses.dataclass(frozen=True)
class StandardForm:
    """Equality-constrained, x >= 0 rewrite of a :class:`Milp`."""

    base: Milp
    A: np.ndarray             # (m, N) equality rows
    b: np.ndarray             # (m,)
    c: np.ndarray             # (N,) objective over standard variables
    ub: np.ndarray            # (N,) upper bounds (lb is identically 0)
    int_mask: np.ndarray      # (N,) bool; slacks are always continuous
    var_map: tuple[VarOrigin, ...]
    obj_offset: float
    n_struct: int             # structural columns precede the slacks
    slack_count: int

    @property
    def n_cols(self) -> int:
        return self.A.shape[1]

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def to_original(self, x_std: np.ndarray) -> np.ndarray:
        """Map a standard-form point back to original variable space."""
        x = np.zeros(self.base.n_vars)
        for col, origin in enumerate(self.var_map):
            if origin.kind == "struct":
                x[origin.index] = origin.offset + origin.sign * x_std[col]
        return x

    def struct_col_of(self, j_orig: int) -> int:
        """Standard-form column holding original variable ``j_orig``."""
        return self._orig_to_col[j_orig]

    @property
    def _orig_to_col(self) -> dict[int, int]:
        mapping = getattr(self, "_orig_to_col_cache", None)
        if mapping is None:
            mapping = {
                o.index: col
                for col, o in enumerate(self.var_map)
                if o.kind == "struct"
            }
            object.__setattr__(self, "_orig_to_col_cache", mapping)
        return mapping

    def bounds_to_std(self, j_orig: int, lo: float, hi: float) -> tuple[int, float, float]:
        """Translate an original-space bound interval to standard space."""
        col = self.struct_col_of(j_orig)
        origin = self.var_map[col]
        if origin.sign > 0:
            return col, lo - origin.offset, hi - origin.offset
        return col, origin.offset - hi, origin.offset - lo


@dataclasses.dataclass
class Solution:
    """Solver answer in original variable space."""

    status: str               # optimal | feasible | infeasible | unbounded | limit
    objective: float
    values: np.ndarray | None = None


def standardize(p: Milp) -> StandardForm:
    """Rewrite ``p`` with equality rows and nonnegative variables.

    Integer variables are shifted by integral amounts; fractional bounds on
    integer variables are first tightened to the enclosed integers (this
    removes no integer point).  Variables with only a finite upper bound are
    negated.  Free variables are rejected.

    Raises
    ------
    InconsistentBounds
        some l_j > u_j.
    FreeVariableUnsupported
        some variable has l_j = -inf and u_j = +inf.
    """
    n = p.n_vars
    lb = p.lb.copy()
    ub = p.ub.copy()

    for j in p.integer_set:
        if np.isfinite(lb[j]):
            lb[j] = np.ceil(lb[j] - 1e-9)
        if np.isfinite(ub[j]):
            ub[j] = np.floor(ub[j] + 1e-9)

    bad = np.nonzero(lb > ub)[0]
    if bad.size:
        raise InconsistentBounds(f"variable {bad[0]}: lb {lb[bad[0]]} > ub {ub[bad[0]]}")

    var_map: list[VarOrigin] = []
    std_ub = np.empty(n)
    signs = np.empty(n)
    offsets = np.empty(n)
    for j in range(n):
        lo, hi = lb[j], ub[j]
        if np.isfinite(lo):
            sign, off = 1.0, lo
            std_ub[j] = hi - lo if np.isfinite(hi) else np.inf
        elif np.isfinite(hi):
            sign, off = -1.0, hi      # x = hi - x'
            std_ub[j] = np.inf
        else:
            raise FreeVariableUnsupported(f"variable {j} has no finite bound")
        signs[j] = sign
        offsets[j] = off
        var_map.append(VarOrigin("struct", j, sign, off))

    # substitute x = offset + sign * x' into rows and objective
    A_struct = p.rows * signs[None, :]
    rhs = p.rhs - p.rows @ offsets
    c_struct = p.c * signs
    obj_offset = float(p.c @ offsets)

    slack_rows = [k for k, s in enumerate(p.senses) if s != EQ]
    m = p.n_rows
    N = n + len(slack_rows)
    A = np.zeros((m, N))
    b = np.empty(m)
    slack_col = n
    for k in range(m):
        row = A_struct[k]
        rk = rhs[k]
        if p.senses[k] == GE:
            row = -row
            rk = -rk
        A[k, :n] = row
        b[k] = rk
        if p.senses[k] != EQ:
            A[k, slack_col] = 1.0
            var_map.append(VarOrigin("slack", k))
            slack_col += 1

    ub_full = np.concatenate([std_ub, np.full(len(slack_rows), np.inf)])
    c_full = np.concatenate([c_struct, np.zeros(len(slack_rows))])
    int_mask = np.zeros(N, dtype=bool)
    for j in p.integer_set:
        int_mask[j] = True

    return StandardForm(
        base=p,
        A=A,
        b=b,
        c=c_full,
        ub=ub_full,
        int_mask=int_mask,
        var_map=tuple(var_map),
        obj_offset=obj_offset,
        n_struct=n,
        slack_count=len(slack_rows),
    )


def check_feasible(p: Milp, x: np.ndarray, tol: float = 1e-7, int_tol: float = 1e-6) -> bool:
    """True iff ``x`` satisfies rows, bounds, and integrality within tolerance."""
    x = np.asarray(x, dtype=float)
    if x.size != p.n_vars:
        raise ValueError("point has wrong length")
    if np.any(x < p.lb - tol) or np.any(x > p.ub + tol):
        return False
    lhs = p.rows @ x
    for k, sense in enumerate(p.senses):
        if sense == LE and lhs[k] > p.rhs[k] + tol:
            return False
        if sense == GE and lhs[k] < p.rhs[k] - tol:
            return False
        if sense == EQ and abs(lhs[k] - p.rhs[k]) > tol:
            return False
    for j in p.integer_set:
        if abs(x[j] - round(x[j])) > int_tol:
            return False
    return True


def objective_value(p: Milp, x: np.ndarray) -> float:
    """c.x for a point in original variable space."""
    x = np.asarray(x, dtype=float)
    if x.size != p.n_vars:
        raise ValueError("point has wrong length")
    return float(p.c @ x)
