# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: Householder tridiagonalization, implicit-shift QL and
Floyd k-subset sampling.

Every routine here has a line-for-line twin in ``_fallback.py``; the two are
kept in lockstep and cross-checked by ``tests/test_backends.py``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, hypot, copysign
from libc.stdlib cimport malloc, free
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()

cdef double EPS = np.finfo(np.float64).eps
cdef double TINY = np.finfo(np.float64).tiny


def tridiagonalize(double[:, ::1] a, bint want_q):
    """Reduce the symmetric matrix ``a`` (overwritten) to tridiagonal form.

    Returns ``(d, e, q)`` with ``e[i]`` coupling rows ``i`` and ``i + 1``;
    ``q`` is None unless ``want_q``.
    """
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t k, i, j
    cdef double alpha, norm, beta, vk, pv, s, wi, vi
    d = np.empty(n, dtype=np.float64)
    e = np.zeros(max(n, 1), dtype=np.float64)
    betas = np.zeros(max(n, 1), dtype=np.float64)
    p_arr = np.empty(max(n, 1), dtype=np.float64)
    cdef double[::1] dv = d, ev = e, bv = betas, p = p_arr
    cdef double[:, ::1] qv
    with nogil:
        for k in range(n - 2):
            norm = 0.0
            for i in range(k + 1, n):
                norm += a[k, i] * a[k, i]
            norm = sqrt(norm)
            if norm == 0.0:
                bv[k] = 0.0
                ev[k] = 0.0
                continue
            alpha = -copysign(norm, a[k, k + 1])
            # v = x - alpha*e1 stored in row k; beta = 2 / v.v
            vk = a[k, k + 1] - alpha
            a[k, k + 1] = vk
            beta = 1.0 / (-alpha * vk)
            bv[k] = beta
            ev[k] = alpha
            # p = beta * A22 v, accumulated row by row (axpy form vectorizes)
            for j in range(k + 1, n):
                p[j] = 0.0
            for i in range(k + 1, n):
                vi = beta * a[k, i]
                for j in range(k + 1, n):
                    p[j] = p[j] + vi * a[i, j]
            pv = 0.0
            for i in range(k + 1, n):
                pv = pv + p[i] * a[k, i]
            # w = p - (beta/2)(p.v) v ; A22 -= v w^T + w v^T
            s = 0.5 * beta * pv
            for i in range(k + 1, n):
                p[i] = p[i] - s * a[k, i]
            for i in range(k + 1, n):
                wi = p[i]
                vi = a[k, i]
                for j in range(k + 1, n):
                    a[i, j] = a[i, j] - vi * p[j] - wi * a[k, j]
        if n >= 2:
            ev[n - 2] = a[n - 2, n - 1]
            bv[n - 2] = 0.0
        for k in range(n):
            dv[k] = a[k, k]
    if not want_q:
        return d, e, None
    q = np.zeros((n, n), dtype=np.float64)
    qv = q
    with nogil:
        for i in range(n):
            qv[i, i] = 1.0
        # backward accumulation Q = H_0 H_1 ... H_{n-3}; only the trailing block changes
        for k in range(n - 3, -1, -1):
            beta = bv[k]
            if beta == 0.0:
                continue
            for j in range(k + 1, n):
                p[j] = 0.0
            for i in range(k + 1, n):
                vi = a[k, i]
                for j in range(k + 1, n):
                    p[j] = p[j] + vi * qv[i, j]
            for i in range(k + 1, n):
                vi = beta * a[k, i]
                for j in range(k + 1, n):
                    qv[i, j] = qv[i, j] - vi * p[j]
    return d, e, q


def ql_implicit(double[::1] d, double[::1] e, z, int max_iter):
    """Implicit-shift QL on the tridiagonal (d, e), in place.

    ``z`` is None (eigenvalues only) or a C-contiguous (n, n) array whose rows
    are rotated alongside. Returns -1 on success, else the index of the
    eigenvalue that exceeded ``max_iter`` sweeps.
    """
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t l, m, i, col, ncols = 0
    cdef int it
    cdef double g, r, s, c, p, f, b, dd, t
    cdef bint want = z is not None
    cdef bint underflow
    cdef double[:, ::1] zv
    if want:
        zv = z
        ncols = zv.shape[1]
    cdef int failed = -1
    with nogil:
        if n >= 1:
            e[n - 1] = 0.0
        for l in range(n):
            it = 0
            while True:
                m = l
                while m < n - 1:
                    dd = fabs(d[m]) + fabs(d[m + 1])
                    if fabs(e[m]) <= EPS * dd or fabs(e[m]) < TINY:
                        break
                    m += 1
                if m == l:
                    break
                if it == max_iter:
                    failed = <int>l
                    break
                it += 1
                g = (d[l + 1] - d[l]) / (2.0 * e[l])
                r = hypot(g, 1.0)
                g = d[m] - d[l] + e[l] / (g + copysign(r, g))
                s = 1.0
                c = 1.0
                p = 0.0
                underflow = False
                i = m - 1
                while i >= l:
                    f = s * e[i]
                    b = c * e[i]
                    r = hypot(f, g)
                    e[i + 1] = r
                    if r == 0.0:
                        d[i + 1] -= p
                        e[m] = 0.0
                        underflow = True
                        break
                    s = f / r
                    c = g / r
                    g = d[i + 1] - p
                    r = (d[i] - g) * s + 2.0 * c * b
                    p = s * r
                    d[i + 1] = g + p
                    g = c * r - b
                    if want:
                        for col in range(ncols):
                            t = zv[i + 1, col]
                            zv[i + 1, col] = s * zv[i, col] + c * t
                            zv[i, col] = c * zv[i, col] - s * t
                    i -= 1
                if underflow:
                    continue
                d[l] -= p
                e[l] = g
                e[m] = 0.0
            if failed >= 0:
                break
    return failed


cdef inline uint64_t _mix(uint64_t x) nogil:
    x ^= x >> 33
    x *= 0xff51afd7ed558ccdULL
    x ^= x >> 33
    return x


def floyd_subset(int64_t n, const int64_t[::1] draws):
    """Floyd's k-subset sampler over ``range(n)``.

    ``draws[t]`` must be uniform on ``[0, n - k + t]`` where ``k = len(draws)``.
    Membership is tracked in an open-addressing table of O(k) size.
    """
    cdef Py_ssize_t k = draws.shape[0]
    cdef Py_ssize_t cap = 16, t, h
    while cap < 2 * k + 2:
        cap <<= 1
    cdef uint64_t mask = <uint64_t>(cap - 1)
    cdef int64_t *table = <int64_t *>malloc(cap * sizeof(int64_t))
    if table == NULL:
        raise MemoryError()
    out = np.empty(k, dtype=np.int64)
    cdef int64_t[::1] ov = out
    cdef int64_t j, cand
    cdef bint found
    try:
        with nogil:
            for t in range(cap):
                table[t] = -1
            for t in range(k):
                j = n - k + t
                cand = draws[t]
                # insert cand unless present, in which case insert j
                h = <Py_ssize_t>(_mix(<uint64_t>cand) & mask)
                found = False
                while table[h] != -1:
                    if table[h] == cand:
                        found = True
                        break
                    h = <Py_ssize_t>((h + 1) & mask)
                if found:
                    cand = j
                    h = <Py_ssize_t>(_mix(<uint64_t>cand) & mask)
                    while table[h] != -1:
                        h = <Py_ssize_t>((h + 1) & mask)
                table[h] = cand
                ov[t] = cand
    finally:
        free(table)
    out.sort()
    return out
