"""Pure-Python/numpy versions of the compiled kernels in ``_kernels.pyx``.

Same algorithms, same arguments, same return conventions. Used when the
extension is not built or when ``NOISESENS_PURE=1`` is set.
"""

import math

import numpy as np

EPS = float(np.finfo(np.float64).eps)
TINY = float(np.finfo(np.float64).tiny)


def tridiagonalize(a, want_q):
    n = a.shape[0]
    d = np.empty(n)
    e = np.zeros(max(n, 1))
    betas = np.zeros(max(n, 1))
    for k in range(n - 2):
        x = a[k, k + 1:]
        norm = math.sqrt(float(x @ x))
        if norm == 0.0:
            continue
        alpha = -math.copysign(norm, x[0])
        vk = x[0] - alpha
        a[k, k + 1] = vk
        beta = 1.0 / (-alpha * vk)
        betas[k] = beta
        e[k] = alpha
        v = a[k, k + 1:]
        block = a[k + 1:, k + 1:]
        p = beta * (block @ v)
        p -= (0.5 * beta * float(p @ v)) * v
        block -= np.outer(v, p)
        block -= np.outer(p, v)
    if n >= 2:
        e[n - 2] = a[n - 2, n - 1]
    d[:] = np.diagonal(a)
    if not want_q:
        return d, e, None
    q = np.eye(n)
    for k in range(n - 3, -1, -1):
        beta = betas[k]
        if beta == 0.0:
            continue
        v = a[k, k + 1:]
        sub = q[k + 1:, k + 1:]
        sub -= np.outer(beta * v, v @ sub)
    return d, e, q


def ql_implicit(d, e, z, max_iter):
    n = d.shape[0]
    if n >= 1:
        e[n - 1] = 0.0
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= EPS * dd or abs(e[m]) < TINY:
                    break
                m += 1
            if m == l:
                break
            if it == max_iter:
                return l
            it += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
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
                if z is not None:
                    t = z[i + 1].copy()
                    z[i + 1] = s * z[i] + c * t
                    z[i] = c * z[i] - s * t
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return -1


def floyd_subset(n, draws):
    k = len(draws)
    chosen = set()
    out = np.empty(k, dtype=np.int64)
    for t in range(k):
        j = n - k + t
        cand = int(draws[t])
        if cand in chosen:
            cand = j
        chosen.add(cand)
        out[t] = cand
    out.sort()
    return out
