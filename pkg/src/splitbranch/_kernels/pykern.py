"""Pure numpy implementations of the simplex hot kernels.

The compiled twin in ``cykern.pyx`` exposes the same five functions with the
same tie-breaking rules; either backend can drive the solver.
"""

import numpy as np

BACKEND = "python"


def price(c, A, y, nb_idx, at_upper, eligible, eps, use_bland):
    """Pick the entering column.

    Returns ``(pos, d)`` where ``pos`` indexes into ``nb_idx`` (-1 when no
    attractive column exists) and ``d`` is the reduced cost.  A column at its
    lower bound is attractive when d < -eps, at its upper bound when d > eps.
    Dantzig picks the largest violation, Bland the lowest variable index;
    ties always break toward the lower variable index.
    """
    d = c[nb_idx] - y @ A[:, nb_idx]
    up = at_upper.astype(bool)
    viol = np.where(up, d, -d)
    mask = eligible.astype(bool) & (viol > eps)
    if not mask.any():
        return -1, 0.0
    positions = np.nonzero(mask)[0]
    if use_bland:
        pos = positions[np.argmin(nb_idx[positions])]
    else:
        best = viol[positions].max()
        cand = positions[viol[positions] == best]
        pos = cand[np.argmin(nb_idx[cand])]
    return int(pos), float(d[pos])


def ratio_test(abar, xb, lb_b, ub_b, basic, gap_q, eps):
    """Largest step for the entering variable in its improving direction.

    ``abar`` is the direction-adjusted FTRAN column: basics move as
    ``xb - t * abar``.  Returns ``(row, step, to_upper)`` with ``row = -1``
    for a bound flip of the entering variable and ``row = -2`` when the LP
    is unbounded; ``to_upper`` tells which bound the leaving basic hits.
    Row ties break toward the lower basic variable index; a flip wins ties
    against a row step.
    """
    m = abar.shape[0]
    steps = np.full(m, np.inf)
    goes_up = np.zeros(m, dtype=bool)

    pos = abar > eps
    steps[pos] = (xb[pos] - lb_b[pos]) / abar[pos]
    neg = abar < -eps
    finite_up = neg & np.isfinite(ub_b)
    steps[finite_up] = (ub_b[finite_up] - xb[finite_up]) / (-abar[finite_up])
    goes_up[finite_up] = True
    np.maximum(steps, 0.0, out=steps)

    best = steps.min() if m else np.inf
    if gap_q <= best:
        if np.isinf(gap_q):
            return -2, np.inf, 0
        return -1, float(gap_q), 0
    cand = np.nonzero(steps == best)[0]
    row = cand[np.argmin(basic[cand])]
    return int(row), float(best), int(goes_up[row])


def ftran(binv, col):
    return binv @ col


def btran(binv, cb):
    return cb @ binv


def update_binv(binv, alpha, r):
    """Rank-1 pivot update of the basis inverse, in place."""
    piv = alpha[r]
    binv[r, :] /= piv
    rest = alpha.copy()
    rest[r] = 0.0
    binv -= np.outer(rest, binv[r])
