"""Instance ingestion, serialization, and seeded synthetic generation.

The MPS support covers the free-format subset needed for exchange with other
solvers: NAME, ROWS, COLUMNS (with INTORG/INTEND markers), RHS, BOUNDS
(LO UP FX FR MI PL BV UI LI), ENDATA.  RANGES and maximization are rejected
explicitly.  The writer and parser round-trip exactly on this subset.

Generators produce three families -- knapsack, setcover, mixed -- that are
feasible and bounded by construction and deterministic per seed; the mixed
family guarantees a continuous share so cut derivations exercise their
continuous-column terms.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

import numpy as np

from .errors import DuplicateEntry, InvalidParams, MalformedRecord, UnsupportedSection
from .model import EQ, GE, LE, Milp

_SECTIONS = {"NAME", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA",
             "OBJSENSE", "OBJSENSE:", "SOS"}
_BOUND_KEYS_VAL = {"LO", "UP", "FX", "UI", "LI"}
_BOUND_KEYS_NOVAL = {"FR", "MI", "PL", "BV"}

MAX_VARS = 1000
ORACLE_TIER_VARS = 30


# -- MPS ----------------------------------------------------------------------

def parse_mps(text: str | bytes) -> Milp:
    """Parse a free-format MPS document into a :class:`Milp`.

    Defaults are l=0, u=+inf for every variable; only a BV bound implies
    an upper bound of 1.  The objective row is minimized.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")

    name = "milp"
    section = None
    obj_row = None
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    col_order: list[str] = []
    col_int: dict[str, bool] = {}
    entries: dict[tuple[str, str], float] = {}
    obj_coef: dict[str, float] = {}
    rhs: dict[str, float] = {}
    bounds_lo: dict[str, float] = {}
    bounds_up: dict[str, float] = {}
    extra_int: set[str] = set()
    in_integer_block = False
    saw_endata = False

    def _num(tok: str) -> float:
        try:
            return float(tok)
        except ValueError:
            raise MalformedRecord(f"expected a number, got {tok!r}")

    for raw in text.splitlines():
        if not raw.strip() or raw.lstrip().startswith("*"):
            continue
        is_header = not raw[0].isspace()
        tokens = raw.split()
        if is_header:
            head = tokens[0].upper()
            if head == "NAME":
                name = tokens[1] if len(tokens) > 1 else "milp"
                section = "NAME"
                continue
            if head == "ENDATA":
                saw_endata = True
                break
            if head == "RANGES":
                raise UnsupportedSection("RANGES sections are not supported")
            if head == "OBJSENSE":
                section = "OBJSENSE"
                if len(tokens) > 1 and tokens[1].upper() in ("MAX", "MAXIMIZE"):
                    raise UnsupportedSection("maximization is not supported")
                continue
            if head in ("ROWS", "COLUMNS", "RHS", "BOUNDS"):
                section = head
                continue
            raise UnsupportedSection(f"unsupported section {head!r}")

        if section == "OBJSENSE":
            if tokens[0].upper() in ("MAX", "MAXIMIZE"):
                raise UnsupportedSection("maximization is not supported")
            continue
        if section == "ROWS":
            if len(tokens) != 2:
                raise MalformedRecord(f"bad ROWS record: {raw!r}")
            sense, rname = tokens[0].upper(), tokens[1]
            if rname in row_sense or rname == obj_row:
                raise DuplicateEntry(f"row {rname!r} defined twice")
            if sense == "N":
                if obj_row is not None:
                    raise MalformedRecord("multiple objective rows")
                obj_row = rname
            elif sense in ("L", "G", "E"):
                row_sense[rname] = {"L": LE, "G": GE, "E": EQ}[sense]
                row_order.append(rname)
            else:
                raise MalformedRecord(f"unknown row sense {sense!r}")
        elif section == "COLUMNS":
            if len(tokens) >= 3 and tokens[1] == "'MARKER'":
                if "'INTORG'" in tokens:
                    in_integer_block = True
                elif "'INTEND'" in tokens:
                    in_integer_block = False
                else:
                    raise MalformedRecord(f"bad marker record: {raw!r}")
                continue
            if len(tokens) < 3 or len(tokens) % 2 == 0:
                raise MalformedRecord(f"bad COLUMNS record: {raw!r}")
            cname = tokens[0]
            if cname not in col_int:
                col_int[cname] = in_integer_block
                col_order.append(cname)
            for k in range(1, len(tokens), 2):
                rname, val = tokens[k], _num(tokens[k + 1])
                if rname == obj_row:
                    if cname in obj_coef:
                        raise DuplicateEntry(f"objective entry {cname!r} twice")
                    obj_coef[cname] = val
                elif rname in row_sense:
                    if (rname, cname) in entries:
                        raise DuplicateEntry(f"entry ({rname}, {cname}) twice")
                    entries[(rname, cname)] = val
                else:
                    raise MalformedRecord(f"unknown row {rname!r} in COLUMNS")
        elif section == "RHS":
            toks = tokens[1:] if len(tokens) % 2 == 1 else tokens
            if len(toks) % 2 != 0 or not toks:
                raise MalformedRecord(f"bad RHS record: {raw!r}")
            for k in range(0, len(toks), 2):
                rname, val = toks[k], _num(toks[k + 1])
                if rname == obj_row:
                    raise UnsupportedSection("objective-row RHS constants unsupported")
                if rname not in row_sense:
                    raise MalformedRecord(f"unknown row {rname!r} in RHS")
                if rname in rhs:
                    raise DuplicateEntry(f"RHS for {rname!r} twice")
                rhs[rname] = val
        elif section == "BOUNDS":
            key = tokens[0].upper()
            if key in _BOUND_KEYS_VAL:
                if len(tokens) != 4:
                    raise MalformedRecord(f"bad BOUNDS record: {raw!r}")
                cname, val = tokens[2], _num(tokens[3])
            elif key in _BOUND_KEYS_NOVAL:
                if len(tokens) != 3:
                    raise MalformedRecord(f"bad BOUNDS record: {raw!r}")
                cname, val = tokens[2], 0.0
            else:
                raise MalformedRecord(f"unknown bound key {key!r}")
            if cname not in col_int:
                raise MalformedRecord(f"bound on unknown column {cname!r}")
            if key == "LO":
                bounds_lo[cname] = val
            elif key == "UP":
                bounds_up[cname] = val
            elif key == "FX":
                bounds_lo[cname] = val
                bounds_up[cname] = val
            elif key == "FR":
                bounds_lo[cname] = -np.inf
            elif key == "MI":
                bounds_lo[cname] = -np.inf
            elif key == "PL":
                bounds_up[cname] = np.inf
            elif key == "BV":
                bounds_lo[cname] = 0.0
                bounds_up[cname] = 1.0
                extra_int.add(cname)
            elif key == "UI":
                bounds_up[cname] = val
                extra_int.add(cname)
            elif key == "LI":
                bounds_lo[cname] = val
                extra_int.add(cname)
        elif section in (None, "NAME"):
            raise MalformedRecord(f"data before any section: {raw!r}")

    if not saw_endata:
        raise MalformedRecord("missing ENDATA")
    if obj_row is None:
        raise MalformedRecord("no objective row declared")

    n = len(col_order)
    col_pos = {cname: j for j, cname in enumerate(col_order)}
    c = np.zeros(n)
    for cname, val in obj_coef.items():
        c[col_pos[cname]] = val
    m = len(row_order)
    row_pos = {rname: k for k, rname in enumerate(row_order)}
    rows = np.zeros((m, n))
    senses = []
    b = np.zeros(m)
    for k, rname in enumerate(row_order):
        senses.append(row_sense[rname])
        b[k] = rhs.get(rname, 0.0)
    for (rname, cname), val in entries.items():
        rows[row_pos[rname], col_pos[cname]] = val

    lb = np.zeros(n)
    ub = np.full(n, np.inf)
    for cname, val in bounds_lo.items():
        lb[col_pos[cname]] = val
    for cname, val in bounds_up.items():
        ub[col_pos[cname]] = val
    J = {col_pos[cname] for cname, flag in col_int.items() if flag}
    J |= {col_pos[cname] for cname in extra_int}

    return Milp(c, rows, tuple(senses), b, lb, ub, frozenset(J), name=name)


def _fmt(v: float) -> str:
    return repr(float(v))


def write_mps(p: Milp) -> str:
    """Serialize to free-format MPS; ``parse_mps`` reproduces ``p`` exactly."""
    lines = [f"NAME          {p.name}", "ROWS", " N  OBJ"]
    rnames = [f"R{k + 1:04d}" for k in range(p.n_rows)]
    cnames = [f"C{j + 1:04d}" for j in range(p.n_vars)]
    for k, sense in enumerate(p.senses):
        letter = {LE: "L", GE: "G", EQ: "E"}[sense]
        lines.append(f" {letter}  {rnames[k]}")

    lines.append("COLUMNS")
    in_int = False
    marker = 0
    for j in range(p.n_vars):
        is_int = j in p.integer_set
        if is_int and not in_int:
            lines.append(f"    M{marker:04d}  'MARKER'  'INTORG'")
            marker += 1
            in_int = True
        elif not is_int and in_int:
            lines.append(f"    M{marker:04d}  'MARKER'  'INTEND'")
            marker += 1
            in_int = False
        lines.append(f"    {cnames[j]}  OBJ  {_fmt(p.c[j])}")
        for k in range(p.n_rows):
            if p.rows[k, j] != 0.0:
                lines.append(f"    {cnames[j]}  {rnames[k]}  {_fmt(p.rows[k, j])}")
    if in_int:
        lines.append(f"    M{marker:04d}  'MARKER'  'INTEND'")

    lines.append("RHS")
    for k in range(p.n_rows):
        if p.rhs[k] != 0.0:
            lines.append(f"    RHS  {rnames[k]}  {_fmt(p.rhs[k])}")

    bound_lines = []
    for j in range(p.n_vars):
        lo, hi = p.lb[j], p.ub[j]
        if lo == 0.0 and np.isposinf(hi):
            continue
        if lo == hi:
            bound_lines.append(f" FX BND  {cnames[j]}  {_fmt(lo)}")
            continue
        if np.isneginf(lo):
            bound_lines.append(f" MI BND  {cnames[j]}")
        elif lo != 0.0:
            bound_lines.append(f" LO BND  {cnames[j]}  {_fmt(lo)}")
        if not np.isposinf(hi):
            bound_lines.append(f" UP BND  {cnames[j]}  {_fmt(hi)}")
    if bound_lines:
        lines.append("BOUNDS")
        lines.extend(bound_lines)
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


# -- manifest -----------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class InstanceManifest:
    """Paths of a benchmark suite plus optional known optima."""

    entries: tuple[tuple[str, float | None], ...]

    def __post_init__(self):
        paths = [path for path, _ in self.entries]
        if len(set(paths)) != len(paths):
            raise DuplicateEntry("manifest paths must be unique")
        for path, opt in self.entries:
            if opt is not None and not np.isfinite(opt):
                raise ValueError(f"known optimum for {path} must be finite")

    @classmethod
    def read(cls, path: str | Path) -> "InstanceManifest":
        entries = []
        for line in Path(path).read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            opt = float(parts[1]) if len(parts) > 1 else None
            entries.append((parts[0], opt))
        return cls(tuple(entries))

    def write(self, path: str | Path):
        lines = []
        for p, opt in self.entries:
            lines.append(p if opt is None else f"{p} {_fmt(opt)}")
        Path(path).write_text("\n".join(lines) + "\n")


# -- generators ---------------------------------------------------------------

def generate_instance(family: str, seed: int, **params) -> Milp:
    """Deterministic synthetic instance of one of the three families.

    knapsack: binary maximization-flavored knapsack (stored as minimization).
    setcover: binary covering rows, every row coverable by construction.
    mixed:    bounded integer + continuous variables around a random feasible
              anchor point; at least 20% of the variables are continuous.

    Every family is feasible and bounded by construction.  Keep sizes at or
    below ``ORACLE_TIER_VARS`` when results must be checkable by exhaustive
    enumeration; anything up to ``MAX_VARS`` is accepted for timing work.
    """
    rng = np.random.default_rng(seed)
    if family == "knapsack":
        return _gen_knapsack(rng, seed, **params)
    if family == "setcover":
        return _gen_setcover(rng, seed, **params)
    if family == "mixed":
        return _gen_mixed(rng, seed, **params)
    raise InvalidParams(f"unknown family {family!r}")


def _check_size(n: int):
    if n < 2:
        raise InvalidParams("instance needs at least 2 variables")
    if n > MAX_VARS:
        raise InvalidParams(f"instance size {n} above cap {MAX_VARS}")


def _gen_knapsack(rng, seed, n: int = 8, correlated: bool = False) -> Milp:
    _check_size(n)
    w = rng.integers(1, 10, size=n).astype(float)
    if correlated:
        profit = w + rng.integers(-1, 3, size=n).astype(float)
        profit = np.maximum(profit, 1.0)
    else:
        profit = rng.integers(1, 10, size=n).astype(float)
    cap = max(float(w.min()), np.floor(0.5 * w.sum()))
    return Milp(
        c=-profit,
        rows=w.reshape(1, -1),
        senses=(LE,),
        rhs=np.array([cap]),
        lb=np.zeros(n),
        ub=np.ones(n),
        integer_set=frozenset(range(n)),
        name=f"knapsack_n{n}_s{seed}" + ("_c" if correlated else ""),
    )


def _gen_setcover(rng, seed, rows: int = 10, cols: int = 7) -> Milp:
    """Covering rows over random column pairs (triples past exhaustion).

    Pair rows make the LP relaxation land on fractional vertices often,
    which keeps these instances useful for branching comparisons.
    """
    _check_size(cols)
    if rows < 1:
        raise InvalidParams("setcover needs at least one row")
    from itertools import combinations

    pairs = list(combinations(range(cols), 2))
    order = rng.permutation(len(pairs))
    M = np.zeros((rows, cols))
    for k in range(rows):
        if k < len(pairs):
            M[k, list(pairs[order[k]])] = 1.0
        else:
            M[k, rng.choice(cols, size=3, replace=False)] = 1.0
    cost = rng.integers(1, 4, size=cols).astype(float)
    return Milp(
        c=cost,
        rows=M,
        senses=(GE,) * rows,
        rhs=np.ones(rows),
        lb=np.zeros(cols),
        ub=np.ones(cols),
        integer_set=frozenset(range(cols)),
        name=f"setcover_r{rows}c{cols}_s{seed}",
    )


def _gen_mixed(rng, seed, n: int = 10, m: int = 4, int_range: int = 4,
               frac_continuous: float = 0.3, sparse_obj: bool = False) -> Milp:
    """Bounded mixed instance built around a random feasible anchor point."""
    _check_size(n)
    if not 0 < frac_continuous < 1 or m < 1 or int_range < 1:
        raise InvalidParams("bad mixed-family parameters")
    n_cont = max(int(np.ceil(0.2 * n)), int(round(frac_continuous * n)))
    n_cont = min(n_cont, n - 1)
    cont_idx = set(rng.choice(n, size=n_cont, replace=False).tolist())
    J = frozenset(j for j in range(n) if j not in cont_idx)

    lb = np.zeros(n)
    ub = np.zeros(n)
    anchor = np.zeros(n)
    for j in range(n):
        if j in J:
            lo = float(rng.integers(-2, 2))
            hi = lo + float(rng.integers(1, int_range + 1))
            anchor[j] = float(rng.integers(int(lo), int(hi) + 1))
        else:
            lo = float(np.round(rng.uniform(-2.0, 0.5), 2))
            hi = lo + float(np.round(rng.uniform(1.0, 5.0), 2))
            anchor[j] = rng.uniform(lo, hi)
        lb[j], ub[j] = lo, hi

    A = rng.integers(-4, 7, size=(m, n)).astype(float)
    A[rng.random((m, n)) < 0.25] = 0.0
    for k in range(m):
        if not A[k].any():
            A[k, rng.integers(0, n)] = 1.0
    senses = []
    b = np.zeros(m)
    act = A @ anchor
    for k in range(m):
        u = rng.random()
        margin = float(rng.uniform(0.5, 2.5))
        if u < 0.15:
            senses.append(EQ)
            b[k] = act[k]
        elif u < 0.35:
            senses.append(GE)
            b[k] = act[k] - margin
        else:
            senses.append(LE)
            b[k] = act[k] + margin

    c = rng.integers(-9, 10, size=n).astype(float)
    if sparse_obj:
        zeros = rng.random(n) < 0.6
        c[zeros] = 0.0
        if not c.any():
            c[int(rng.integers(0, n))] = -1.0
    return Milp(
        c=c,
        rows=A,
        senses=tuple(senses),
        rhs=b,
        lb=lb,
        ub=ub,
        integer_set=J,
        name=f"mixed_n{n}m{m}_s{seed}" + ("_z" if sparse_obj else ""),
    )
