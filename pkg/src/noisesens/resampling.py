"""Entry resampling: uniform k-subsets of slots, X^[k], single-entry
replacement and the permutation chains behind the I_i functional.

Slot numbers are packed-triangle indices (see :mod:`noisesens.models`).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._backend import kernels
from .models import SymMatrix, n_slots, packed_index


@dataclass(frozen=True, eq=False)
class PairSet:
    """Sorted, distinct packed slot indices of an n x n matrix."""

    n: int
    pairs: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.asarray(self.pairs, dtype=np.int64)
        if p.ndim != 1:
            raise ValueError("pairs must be one-dimensional")
        total = n_slots(self.n)
        if p.size > total:
            raise ValueError("more pairs than slots")
        if p.size:
            if p[0] < 0 or p[-1] >= total:
                raise ValueError("slot index out of range")
            if np.any(np.diff(p) <= 0):
                raise ValueError("pairs must be sorted and distinct")
        p = p.copy()
        p.flags.writeable = False
        object.__setattr__(self, "pairs", p)

    def __len__(self):
        return int(self.pairs.size)

    def __eq__(self, other):
        if not isinstance(other, PairSet):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.pairs, other.pairs)

    __hash__ = None

    def to_json(self):
        return json.dumps({"n": self.n, "pairs": self.pairs.tolist()})

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        return cls(int(obj["n"]), np.array(obj["pairs"], dtype=np.int64))

    def to_bytes(self):
        return np.asarray([self.n, len(self)], dtype="<u8").tobytes() + self.pairs.astype("<u8").tobytes()

    @classmethod
    def from_bytes(cls, buf):
        n, k = np.frombuffer(buf, dtype="<u8", count=2)
        pairs = np.frombuffer(buf, dtype="<u8", offset=16)
        if pairs.size != k:
            raise ValueError("truncated pair set")
        return cls(int(n), pairs.astype(np.int64))

    def save(self, path):
        path = Path(path)
        if path.suffix == ".json":
            path.write_text(self.to_json())
        else:
            path.write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path):
        path = Path(path)
        if path.suffix == ".json":
            return cls.from_json(path.read_text())
        return cls.from_bytes(path.read_bytes())


def floyd_draws(gen, total, k):
    """Random inputs for Floyd's algorithm: draw t is uniform on [0, total-k+t]."""
    highs = np.arange(total - k + 1, total + 1, dtype=np.int64)
    if k == 0:
        return np.empty(0, dtype=np.int64)
    return np.ascontiguousarray(gen.integers(0, highs, dtype=np.int64))


def sample_indices(total, k, rng, backend=None):
    """Uniform k-subset of range(total), sorted, via Floyd's algorithm."""
    if not 0 <= k <= total:
        raise ValueError(f"k={k} outside [0, {total}]")
    kern = kernels if backend is None else backend
    return kern.floyd_subset(total, floyd_draws(rng.generator(), total, k))


def sample_pair_set(n, k, rng, backend=None):
    return PairSet(n, sample_indices(n_slots(n), k, rng, backend))


def resample(x, s, fresh):
    """X^[k]: entries of ``fresh`` on the slots of ``s``, entries of ``x`` elsewhere."""
    if not x.n == s.n == fresh.n:
        raise ValueError(f"dimension mismatch: {x.n}, {s.n}, {fresh.n}")
    data = x.data.copy()
    data[s.pairs] = fresh.data[s.pairs]
    return SymMatrix(x.n, data)


def single_entry_replace(x, i, j, value_source):
    """B_(ij): ``x`` with slot (i, j) (and its mirror) taken from ``value_source``."""
    if x.n != value_source.n:
        raise ValueError("dimension mismatch")
    if i > j:
        raise ValueError("single_entry_replace expects i <= j")
    idx = packed_index(x.n, i, j)
    data = x.data.copy()
    data[idx] = value_source.data[idx]
    return SymMatrix(x.n, data)


@dataclass(frozen=True, eq=False)
class PermutationChain:
    """(X, X', X'', sigma, j) for one replicate of the I_i estimator.

    ``base``, ``prime`` and ``doubleprime`` are either SymMatrix objects or
    plain 1-d arrays of the same length n_slots; ``chain_matrix`` returns the
    same kind. ``sigma`` and ``j`` are 0-based slot numbers.
    """

    base: object
    prime: object
    doubleprime: object
    sigma: np.ndarray
    j: int

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=np.int64)
        n = self.n_slots
        if sigma.shape != (n,) or not np.array_equal(np.sort(sigma), np.arange(n)):
            raise ValueError("sigma must be a permutation of the slots")
        if not 0 <= self.j < n:
            raise ValueError("j out of range")
        for name in ("prime", "doubleprime"):
            if _vec(getattr(self, name)).shape != (n,):
                raise ValueError(f"{name} has the wrong length")
        sigma.flags.writeable = False
        object.__setattr__(self, "sigma", sigma)

    @property
    def n_slots(self):
        return _vec(self.base).shape[0]

    @classmethod
    def draw(cls, base, prime, doubleprime, gen):
        n = _vec(base).shape[0]
        sigma = gen.permutation(n)
        j = int(gen.integers(n))
        return cls(base, prime, doubleprime, sigma, j)


def _vec(x):
    return x.data if isinstance(x, SymMatrix) else np.asarray(x, dtype=np.float64)


def chain_vector(chain, i, with_j_replacement=False):
    """Entry vector of X^{sigma([i])}, or X^{(j) o sigma([i])} when flagged."""
    if not 0 <= i <= chain.n_slots:
        raise ValueError(f"step {i} outside [0, {chain.n_slots}]")
    out = _vec(chain.base).copy()
    taken = chain.sigma[:i]
    out[taken] = _vec(chain.prime)[taken]
    if with_j_replacement:
        out[chain.j] = _vec(chain.doubleprime)[chain.j]
    return out


def chain_matrix(chain, i, with_j_replacement=False):
    v = chain_vector(chain, i, with_j_replacement)
    if isinstance(chain.base, SymMatrix):
        return SymMatrix(chain.base.n, v)
    return v
