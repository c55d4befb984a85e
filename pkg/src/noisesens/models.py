"""Matrix ensembles: Wigner, Erdős–Rényi adjacency, its centered version and
the sparse shifted model, plus the packed symmetric storage they share.

Entries live in a packed upper triangle, row-major: slot ``(i, j)`` with
``i <= j`` (0-based) sits at ``i*n - i*(i-1)//2 + (j - i)``. Every module
uses this single index map, including the "vector of entries" view used by
the resampling chains.
"""

from __future__ import annotations

import csv
import enum
import math
import struct
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

MAGIC = b"SNMX"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQ")


class ModelKind(str, enum.Enum):
    WIGNER = "wigner"
    ER_ADJACENCY = "er"
    ER_CENTERED = "er-centered"
    SPARSE_SHIFTED = "sparse-shifted"

    @property
    def is_er(self):
        return self is not ModelKind.WIGNER


def n_slots(n):
    """Number of independent entries of an n x n symmetric matrix."""
    return n * (n + 1) // 2


def packed_index(n, i, j):
    if i > j:
        i, j = j, i
    if not 0 <= i <= j < n:
        raise IndexError(f"slot ({i}, {j}) out of range for n={n}")
    return i * n - i * (i - 1) // 2 + (j - i)


@lru_cache(maxsize=64)
def triu_indices(n):
    """Row/column arrays of the packed slots, in packed order."""
    iu, ju = np.triu_indices(n)
    iu.flags.writeable = False
    ju.flags.writeable = False
    return iu, ju


def slot_pair(n, idx):
    """Inverse of :func:`packed_index`."""
    iu, ju = triu_indices(n)
    return int(iu[idx]), int(ju[idx])


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """Dense real symmetric matrix held as its packed upper triangle.

    Instances are immutable; equality is bitwise on the packed data.
    """

    n: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.shape != (n_slots(self.n),):
            raise ValueError(f"expected {n_slots(self.n)} packed entries, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("matrix entries must be finite")
        if data.flags.writeable:
            data = data.copy()
            data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @classmethod
    def from_dense(cls, a):
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("square matrix required")
        if not np.array_equal(a, a.T):
            raise ValueError("matrix is not symmetric")
        n = a.shape[0]
        iu, ju = triu_indices(n)
        return cls(n, a[iu, ju])

    def to_dense(self):
        iu, ju = triu_indices(self.n)
        a = np.empty((self.n, self.n))
        a[iu, ju] = self.data
        a[ju, iu] = self.data
        return a

    def __eq__(self, other):
        if not isinstance(other, SymMatrix):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.data.view(np.uint64), other.data.view(np.uint64))

    __hash__ = None

    def __getitem__(self, ij):
        i, j = ij
        return float(self.data[packed_index(self.n, i, j)])

    def frobenius_norm(self):
        return math.sqrt(float(np.sum(self.to_dense() ** 2)))

    # -- serialization -------------------------------------------------

    def to_bytes(self):
        return _HEADER.pack(MAGIC, FORMAT_VERSION, self.n) + self.data.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, buf):
        magic, version, n = _HEADER.unpack_from(buf)
        if magic != MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported format version {version}")
        body = np.frombuffer(buf, dtype="<f8", offset=_HEADER.size)
        if body.size != n_slots(n):
            raise ValueError("truncated matrix payload")
        return cls(int(n), body.astype(np.float64))

    def save(self, path):
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path):
        return cls.from_bytes(Path(path).read_bytes())

    def write_csv(self, path):
        """Debug dump: one ``i,j,value`` row per packed slot."""
        iu, ju = triu_indices(self.n)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "j", "value"])
            for i, j, v in zip(iu.tolist(), ju.tolist(), self.data.tolist()):
                w.writerow([i, j, repr(v)])


@dataclass(frozen=True)
class RandomSource:
    """Counter-based stream: Philox keyed by ``(master_seed, stream_id)``.

    The k-th draw of a stream depends only on the key and k, so a trial's
    entries are the same under any scheduler.
    """

    master_seed: int
    stream_id: int

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if not 0 <= v < 2**64:
                raise ValueError(f"{name} must fit in 64 unsigned bits")

    def generator(self):
        return np.random.Generator(np.random.Philox(key=[self.master_seed, self.stream_id]))


def control_parameter(n):
    """L = (log N)^(log log N)."""
    if n < 3:
        raise ValueError("control parameter needs N >= 3")
    ln = math.log(n)
    return ln ** math.log(ln)


@dataclass(frozen=True)
class ModelSpec:
    kind: ModelKind
    n: int
    sigma: float = 1.0
    q: float | None = None
    f: float | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.kind.is_er:
            if self.q is None:
                raise ValueError(f"{self.kind.value} model needs q")
            if not 1.0 < self.q < math.sqrt(self.n):
                raise ValueError(f"need 1 < q < sqrt(N); got q={self.q}, N={self.n}")
        if self.kind is ModelKind.SPARSE_SHIFTED:
            if self.f is None or self.f < 0:
                raise ValueError("sparse shifted model needs f >= 0")
            if self.n >= 3:
                big_l = control_parameter(self.n)
                if not self.q / big_l <= self.f <= big_l * self.q:
                    warnings.warn(
                        f"f={self.f} outside [q/L, qL] = [{self.q / big_l:.4g}, {self.q * big_l:.4g}]",
                        stacklevel=2,
                    )

    @classmethod
    def er(cls, n, b, kind=ModelKind.ER_ADJACENCY, **kw):
        """ER-type spec with sparsity q = N^b."""
        return cls(kind, n, q=float(n) ** b, **kw)

    @property
    def p(self):
        return self.q**2 / self.n

    @property
    def mean_entry(self):
        """E[a_ij] of the adjacency law, zeta*q/N."""
        return zeta(self) * self.q / self.n


def zeta(spec):
    """(1 - q^2/N)^(-1/2)."""
    if spec.q is None:
        raise ValueError("zeta is defined for ER-type models only")
    ratio = spec.q**2 / spec.n
    if ratio >= 1.0:
        raise ValueError(f"q^2 = {spec.q ** 2} must be below N = {spec.n}")
    return 1.0 / math.sqrt(1.0 - ratio)


def _check_kind(spec, *kinds):
    if spec.kind not in kinds:
        raise ValueError(f"sampler expects {[k.value for k in kinds]}, got {spec.kind.value}")


def gaussian_entries(gen, n, sigma):
    """Default Wigner entry law; swap for any centered unit-variance law."""
    x = gen.standard_normal(n_slots(n))
    x[_diag_slots(n)] *= sigma
    return x


@lru_cache(maxsize=64)
def _diag_slots(n):
    i = np.arange(n)
    return i * n - i * (i - 1) // 2


def sample_wigner(spec, rng, entry_law=gaussian_entries):
    _check_kind(spec, ModelKind.WIGNER)
    return SymMatrix(spec.n, entry_law(rng.generator(), spec.n, spec.sigma))


def _bernoulli_mask(spec, rng):
    u = rng.generator().random(n_slots(spec.n))
    return u < spec.p


def sample_er_adjacency(spec, rng):
    """Each packed slot, diagonal included, is zeta/q w.p. q^2/N and 0 otherwise."""
    _check_kind(spec, ModelKind.ER_ADJACENCY)
    value = zeta(spec) / spec.q
    return SymMatrix(spec.n, np.where(_bernoulli_mask(spec, rng), value, 0.0))


def _centered(spec, rng):
    value = zeta(spec) / spec.q
    return np.where(_bernoulli_mask(spec, rng), value, 0.0) - spec.mean_entry


def sample_er_centered(spec, rng):
    _check_kind(spec, ModelKind.ER_CENTERED)
    return SymMatrix(spec.n, _centered(spec, rng))


def sample_sparse_shifted(spec, rng):
    """H + f e e^T with e = N^(-1/2)(1, ..., 1); every entry of e e^T is 1/N."""
    _check_kind(spec, ModelKind.SPARSE_SHIFTED)
    h = _centered(spec, rng)
    if spec.f:
        h = h + spec.f / spec.n
    return SymMatrix(spec.n, h)


_SAMPLERS = {
    ModelKind.WIGNER: sample_wigner,
    ModelKind.ER_ADJACENCY: sample_er_adjacency,
    ModelKind.ER_CENTERED: sample_er_centered,
    ModelKind.SPARSE_SHIFTED: sample_sparse_shifted,
}


def sample(spec, rng):
    """Dispatch to the sampler for ``spec.kind``."""
    return _SAMPLERS[spec.kind](spec, rng)
