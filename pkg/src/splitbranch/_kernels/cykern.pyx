# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled simplex hot kernels; mirrors pykern exactly, including ties."""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, isfinite

cnp.import_array()

BACKEND = "cython"


def price(double[::1] c, double[:, ::1] A, double[::1] y,
          cnp.int64_t[::1] nb_idx, unsigned char[::1] at_upper,
          unsigned char[::1] eligible, double eps, bint use_bland):
    cdef Py_ssize_t k = nb_idx.shape[0]
    cdef Py_ssize_t m = A.shape[0]
    cdef Py_ssize_t p, t
    cdef cnp.int64_t j, best_var = -1
    cdef double d, viol, s
    cdef double best_viol = 0.0, best_d = 0.0
    cdef Py_ssize_t best_pos = -1

    for p in range(k):
        if not eligible[p]:
            continue
        j = nb_idx[p]
        s = 0.0
        for t in range(m):
            s += y[t] * A[t, j]
        d = c[j] - s
        viol = d if at_upper[p] else -d
        if viol <= eps:
            continue
        if use_bland:
            if best_pos < 0 or j < best_var:
                best_pos = p
                best_var = j
                best_d = d
        else:
            if viol > best_viol or (viol == best_viol and j < best_var):
                best_viol = viol
                best_pos = p
                best_var = j
                best_d = d
    if best_pos < 0:
        return -1, 0.0
    return best_pos, best_d


def ratio_test(double[::1] abar, double[::1] xb, double[::1] lb_b,
               double[::1] ub_b, cnp.int64_t[::1] basic, double gap_q,
               double eps):
    cdef Py_ssize_t m = abar.shape[0]
    cdef Py_ssize_t i
    cdef double a, step
    cdef double best = INFINITY
    cdef Py_ssize_t best_row = -1
    cdef cnp.int64_t best_var = -1
    cdef int best_up = 0, up

    for i in range(m):
        a = abar[i]
        if a > eps:
            step = (xb[i] - lb_b[i]) / a
            up = 0
        elif a < -eps and isfinite(ub_b[i]):
            step = (ub_b[i] - xb[i]) / (-a)
            up = 1
        else:
            continue
        if step < 0.0:
            step = 0.0
        if step < best or (step == best and basic[i] < best_var):
            best = step
            best_row = i
            best_var = basic[i]
            best_up = up
    if gap_q <= best:
        if gap_q == INFINITY:
            return -2, INFINITY, 0
        return -1, gap_q, 0
    return best_row, best, best_up


def ftran(double[:, ::1] binv, double[::1] col):
    cdef Py_ssize_t m = binv.shape[0]
    out = np.empty(m)
    cdef double[::1] o = out
    cdef Py_ssize_t i, j
    cdef double s
    for i in range(m):
        s = 0.0
        for j in range(m):
            s += binv[i, j] * col[j]
        o[i] = s
    return out


def btran(double[:, ::1] binv, double[::1] cb):
    cdef Py_ssize_t m = binv.shape[0]
    out = np.empty(m)
    cdef double[::1] o = out
    cdef Py_ssize_t i, j
    cdef double s
    for j in range(m):
        s = 0.0
        for i in range(m):
            s += cb[i] * binv[i, j]
        o[j] = s
    return out


def update_binv(double[:, ::1] binv, double[::1] alpha, Py_ssize_t r):
    cdef Py_ssize_t m = binv.shape[0]
    cdef Py_ssize_t i, j
    cdef double piv = alpha[r]
    cdef double f
    for j in range(m):
        binv[r, j] /= piv
    for i in range(m):
        if i == r:
            continue
        f = alpha[i]
        if f != 0.0:
            for j in range(m):
                binv[i, j] -= f * binv[r, j]
