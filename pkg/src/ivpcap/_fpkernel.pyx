# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Fincke-Pohst enumeration kernel.

Same contract as ``_enum_py.fp_enumerate``: depth-first over the last
coordinate first, with per-coordinate integer box limits.
"""
import numpy as np

from libc.math cimport ceil, floor, sqrt
from libc.stdlib cimport free, malloc, realloc


cdef int _grow(long long **pts, double **vals, Py_ssize_t *cap, int n) except -1:
    cdef Py_ssize_t newcap = cap[0] * 2 if cap[0] > 0 else 1024
    cdef long long *p = <long long *> realloc(pts[0], newcap * n * sizeof(long long))
    if p == NULL:
        raise MemoryError()
    pts[0] = p
    cdef double *v = <double *> realloc(vals[0], newcap * sizeof(double))
    if v == NULL:
        raise MemoryError()
    vals[0] = v
    cap[0] = newcap
    return 0


def fp_enumerate(double[::1] qdiag, double[:, ::1] mu, double r_out2, double r_in2,
                 long long[::1] lo, long long[::1] hi, bint record_inner,
                 long long limit):
    """Enumerate ``x`` with ``sum_i q_i (x_i + sum_{j>i} mu_ij x_j)^2 <= r_out2``.

    Returns ``(n_inner, points, values, overflow)``: ``n_inner`` counts points
    with value ``<= r_in2``; ``points``/``values`` hold every recorded point
    (the shell ``r_in2 < value <= r_out2``, plus inner points when
    ``record_inner``).  ``overflow`` is set when more than ``limit`` points
    would be recorded; enumeration stops there.
    """
    cdef int n = qdiag.shape[0]
    cdef int i, j
    cdef long long n_inner = 0
    cdef Py_ssize_t n_rec = 0, cap = 0
    cdef long long *pts = NULL
    cdef double *vals = NULL
    cdef bint overflow = False
    cdef double c, rem, w, diff, s
    cdef long long a, b
    cdef long long[:, ::1] pv
    cdef double[::1] vv

    cdef long long *x = <long long *> malloc(n * sizeof(long long))
    cdef long long *upper = <long long *> malloc(n * sizeof(long long))
    cdef double *center = <double *> malloc(n * sizeof(double))
    cdef double *partial = <double *> malloc((n + 1) * sizeof(double))
    if x == NULL or upper == NULL or center == NULL or partial == NULL:
        free(x); free(upper); free(center); free(partial)
        raise MemoryError()

    try:
        partial[n] = 0.0
        i = n - 1
        # open level i: compute its interval
        while True:
            c = 0.0
            for j in range(i + 1, n):
                c -= mu[i, j] * x[j]
            center[i] = c
            rem = r_out2 - partial[i + 1]
            if rem < 0:
                rem = -1.0
            if rem >= 0:
                w = sqrt(rem / qdiag[i])
                a = <long long> ceil(c - w)
                b = <long long> floor(c + w)
                if a < lo[i]:
                    a = lo[i]
                if b > hi[i]:
                    b = hi[i]
            else:
                a = 1
                b = 0
            x[i] = a
            upper[i] = b
            # advance through level i, descending when possible
            while True:
                if x[i] > upper[i]:
                    i += 1
                    if i == n:
                        break
                    x[i] += 1
                    continue
                diff = x[i] - center[i]
                s = partial[i + 1] + qdiag[i] * diff * diff
                if s > r_out2:
                    x[i] += 1
                    continue
                partial[i] = s
                if i > 0:
                    i -= 1
                    break
                # leaf
                if s <= r_in2:
                    n_inner += 1
                if s > r_in2 or record_inner:
                    if n_rec >= limit:
                        overflow = True
                        i = n
                        break
                    if n_rec >= cap:
                        _grow(&pts, &vals, &cap, n)
                    for j in range(n):
                        pts[n_rec * n + j] = x[j]
                    vals[n_rec] = s
                    n_rec += 1
                x[0] += 1
            if i == n:
                break

        points = np.empty((n_rec, n), dtype=np.int64)
        values = np.empty(n_rec, dtype=np.float64)
        pv = points
        vv = values
        for a in range(n_rec):
            vv[a] = vals[a]
            for j in range(n):
                pv[a, j] = pts[a * n + j]
        return n_inner, points, values, overflow
    finally:
        free(x); free(upper); free(center); free(partial)
        free(pts); free(vals)
