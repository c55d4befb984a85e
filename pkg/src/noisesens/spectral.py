"""Dense symmetric eigensolver, resolvents and semicircle-law analytics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels as _default_kernels
from ._backend import get_kernels
from .models import SymMatrix

MAX_QL_ITER = 60
DEGENERACY_RTOL = 1e-8


class EigenConvergenceError(RuntimeError):
    """QL failed to isolate eigenvalue ``index`` within the iteration cap."""

    def __init__(self, index):
        super().__init__(f"QL iteration did not converge for eigenvalue {index} after {MAX_QL_ITER} sweeps")
        self.index = index


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Descending eigenvalues; ``vectors[m]`` is the unit eigenvector of ``values[m]``."""

    values: np.ndarray
    vectors: np.ndarray = field(repr=False)
    residual_norm: float = 0.0

    @property
    def n(self):
        return self.values.shape[0]

    def vector(self, m):
        """Eigenvector of the m-th largest eigenvalue (1-based, like v_1, v_2)."""
        return self.vectors[m - 1]

    def gaps(self):
        return self.values[:-1] - self.values[1:]

    def write_csv(self, path):
        """``index,value,gap_to_next`` rows; the last gap is left empty."""
        gaps = self.gaps()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "value", "gap_to_next"])
            for m, lam in enumerate(self.values.tolist()):
                w.writerow([m + 1, repr(lam), repr(float(gaps[m])) if m < len(gaps) else ""])


def _dense(a):
    if isinstance(a, SymMatrix):
        return a.to_dense()
    a = np.array(a, dtype=np.float64, order="C")
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("square matrix required")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def _sign_normalize(vectors):
    # largest-magnitude coordinate positive; argmax picks the lowest index on ties
    pivot = np.argmax(np.abs(vectors), axis=1)
    signs = np.sign(vectors[np.arange(vectors.shape[0]), pivot])
    signs[signs == 0] = 1.0
    vectors *= signs[:, None]
    return vectors


def eigendecompose(a, backend=None):
    """Full decomposition by Householder tridiagonalization + implicit-shift QL.

    Accepts a SymMatrix or a dense symmetric array.
    """
    kern = _default_kernels if backend is None else get_kernels(backend)
    work = _dense(a)
    original = work.copy()
    n = work.shape[0]
    d, e, q = kern.tridiagonalize(work, True)
    z = np.eye(n)
    failed = kern.ql_implicit(d, e, z, MAX_QL_ITER)
    if failed >= 0:
        raise EigenConvergenceError(failed)
    vecs = z @ q.T
    order = np.argsort(-d, kind="stable")
    values = d[order]
    vecs = np.ascontiguousarray(vecs[order])
    _sign_normalize(vecs)
    resid = 0.0
    if n:
        resid = float(np.max(np.linalg.norm(vecs @ original - values[:, None] * vecs, axis=1)))
    values.flags.writeable = False
    vecs.flags.writeable = False
    return EigenSystem(values, vecs, resid)


def eigenvalues(a, backend=None):
    """Descending eigenvalues only (no eigenvector accumulation)."""
    kern = _default_kernels if backend is None else get_kernels(backend)
    work = _dense(a)
    d, e, _ = kern.tridiagonalize(work, False)
    failed = kern.ql_implicit(d, e, None, MAX_QL_ITER)
    if failed >= 0:
        raise EigenConvergenceError(failed)
    return -np.sort(-d)


def is_degenerate(values, m=2):
    """True when lambda_m is within the degeneracy tolerance of a neighbour."""
    lam = values[m - 1]
    tol = DEGENERACY_RTOL * (1.0 + abs(lam))
    below = m < len(values) and lam - values[m] < tol
    above = m >= 2 and values[m - 2] - lam < tol
    return bool(below or above)


def second_top_vector(es):
    """(v_2, degenerate) where the flag marks lambda_2 - lambda_3 below tolerance."""
    if es.n < 2:
        raise ValueError("second top eigenvector needs N >= 2")
    v = es.vectors[1]
    if es.n < 3:
        return v, False
    lam2, lam3 = es.values[1], es.values[2]
    return v, bool(lam2 - lam3 < DEGENERACY_RTOL * (1.0 + abs(lam2)))


@dataclass(frozen=True)
class ComplexPoint:
    e: float
    eta: float

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be strictly positive")

    @property
    def z(self):
        return complex(self.e, self.eta)


def resolvent_entry(es, z, i, j):
    """R(z)_ij = sum_m v_m(i) v_m(j) / (lambda_m - z)."""
    w = es.vectors[:, i] * es.vectors[:, j]
    return complex(np.sum(w / (es.values - z.z)))


def resolvent_matrix(es, z):
    """Full (A - z)^{-1} from the spectral sum."""
    v = es.vectors
    return (v.T * (1.0 / (es.values - z.z))) @ v


def resolvent_direct(a, z):
    """Dense complex solve of (A - z) R = I; kept as an independent check."""
    a = _dense(a)
    n = a.shape[0]
    return np.linalg.solve(a - z.z * np.eye(n), np.eye(n, dtype=complex))


def msc(z):
    """Stieltjes transform of the semicircle law: root of m^2 + z m + 1 with Im m > 0."""
    zz = z.z if isinstance(z, ComplexPoint) else complex(z)
    root = np.sqrt(complex(zz * zz - 4.0))
    m1 = (-zz + root) / 2.0
    m2 = (-zz - root) / 2.0
    return m1 if m1.imag > m2.imag else m2


def semicircle_density(x):
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.clip(4.0 - x * x, 0.0, None)) / (2.0 * math.pi)


def semicircle_tail(x):
    """mu_sc((x, inf)) in closed form."""
    x = np.clip(np.asarray(x, dtype=float), -2.0, 2.0)
    return 0.5 - x * np.sqrt(4.0 - x * x) / (4.0 * math.pi) - np.arcsin(x / 2.0) / math.pi


@dataclass(frozen=True, eq=False)
class SemicircleTable:
    n: int
    gamma: np.ndarray = field(repr=False)

    def location(self, i):
        """gamma_i, 1-based."""
        return float(self.gamma[i - 1])


def semicircle_table(n):
    """Classical locations: mu_sc(gamma_i, inf) = i/N for i = 1..N, by bisection."""
    if n < 1:
        raise ValueError("n must be positive")
    target = np.arange(1, n + 1) / n
    lo = np.full(n, -2.0)
    hi = np.full(n, 2.0)
    # the tail mass is decreasing in x
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        above = semicircle_tail(mid) > target
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    gamma = 0.5 * (lo + hi)
    gamma.flags.writeable = False
    return SemicircleTable(n, gamma)
