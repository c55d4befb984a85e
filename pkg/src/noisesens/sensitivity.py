"""Statistics measured on eigen-decompositions and on resampling chains.

Monte Carlo estimators return a mean together with its standard error and
every acceptance comparison in the package is made at the 3-SE level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .models import ModelKind, SymMatrix, control_parameter, n_slots, packed_index, zeta
from .resampling import chain_matrix, single_entry_replace
from .spectral import ComplexPoint, eigendecompose, second_top_vector

UNIT_TOL = 1e-8


def mean_se(samples):
    """Mean and standard error with compensated sums (order independent to ~1e-16)."""
    x = [float(v) for v in samples]
    m = len(x)
    if m == 0:
        return math.nan, math.nan
    mean = math.fsum(x) / m
    if m == 1:
        return mean, math.nan
    var = math.fsum((v - mean) ** 2 for v in x) / (m - 1)
    return mean, math.sqrt(var / m)


# -- overlaps -----------------------------------------------------------


@dataclass(frozen=True)
class OverlapResult:
    inner: float
    abs_inner: float
    alignment: float


def overlap(v, w):
    """<v, w>, |<v, w>| and min_s sqrt(N) ||v - s w||_inf."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if v.shape != w.shape:
        raise ValueError("vectors must have equal dimension")
    for name, x in (("v", v), ("w", w)):
        if abs(np.linalg.norm(x) - 1.0) > UNIT_TOL:
            raise ValueError(f"{name} is not a unit vector")
    # cosine form: identical inputs give exactly 1 since sqrt(fl(s*s)) == s
    inner = float(v @ w) / math.sqrt(float(v @ v) * float(w @ w))
    inner = min(1.0, max(-1.0, inner))
    sup = min(float(np.max(np.abs(v - w))), float(np.max(np.abs(v + w))))
    return OverlapResult(inner, abs(inner), math.sqrt(v.size) * sup)


# -- single-matrix statistics -------------------------------------------


@dataclass(frozen=True)
class Delocalization:
    max_sup_norm: float
    bound: float
    top_deviation: float

    @property
    def delocalized(self):
        return self.max_sup_norm <= self.bound


def flat_vector(n):
    return np.full(n, 1.0 / math.sqrt(n))


def delocalization_stat(es, exponent=4.0):
    """max_i ||v_i||_inf against (log N)^C / sqrt(N), plus ||v_1 - e||_2.

    The sign of v_1 is taken so that <v_1, e> >= 0.
    """
    n = es.n
    sup = float(np.max(np.abs(es.vectors)))
    bound = math.log(n) ** exponent / math.sqrt(n) if n > 1 else math.inf
    e = flat_vector(n)
    v1 = es.vectors[0]
    if v1 @ e < 0:
        v1 = -v1
    return Delocalization(sup, bound, float(np.linalg.norm(v1 - e)))


def predicted_top_eigenvalue(spec):
    if spec.kind is ModelKind.ER_ADJACENCY:
        zq = zeta(spec) * spec.q
        return zq + 1.0 / zq
    if spec.kind is ModelKind.SPARSE_SHIFTED:
        return spec.f + 1.0 / spec.f
    raise ValueError(f"no outlier eigenvalue for {spec.kind.value} models")


def top_eigenvalue_deviation(es, spec):
    """lambda_1 - (zeta q + 1/(zeta q)); f + 1/f for the shifted model."""
    return float(es.values[0]) - predicted_top_eigenvalue(spec)


@dataclass(frozen=True, eq=False)
class RigidityProfile:
    deviation: np.ndarray = field(repr=False)
    bound: np.ndarray = field(repr=False)

    @property
    def within(self):
        return self.deviation <= self.bound

    @property
    def fraction_within(self):
        return float(np.mean(self.within)) if self.deviation.size else 1.0


def rigidity_bound(n, q=None, exponent=4.0):
    """L^C (N^{-2/3} min(i, N-i)^{-1/3} + q^{-2}) for i = 2..N (infinite at i = N)."""
    i = np.arange(2, n + 1)
    m = np.minimum(i, n - i).astype(float)
    with np.errstate(divide="ignore"):
        edge = np.where(m > 0, n ** (-2.0 / 3.0) * m ** (-1.0 / 3.0), math.inf)
    sparse = 0.0 if q is None else q**-2
    return control_parameter(n) ** exponent * (edge + sparse)


def rigidity_profile(es, table, q=None, exponent=4.0):
    """|lambda_i - gamma_i| for i = 2..N alongside the location bound."""
    values = es.values if hasattr(es, "values") else np.asarray(es)
    if len(values) != table.n:
        raise ValueError("dimension mismatch between spectrum and table")
    dev = np.abs(values[1:] - table.gamma[1:])
    return RigidityProfile(dev, rigidity_bound(table.n, q, exponent))


@dataclass(frozen=True, eq=False)
class GapStats:
    gaps: np.ndarray = field(repr=False)
    min_gap: float
    thresholds: dict
    tail_counts: dict
    second_gap_small: dict


def gap_statistics(es, c, rho):
    """Gaps lambda_i - lambda_{i+1} and counts of gaps <= c N^{-1-rho}.

    ``rho`` may be a scalar or a sequence; results are keyed by rho.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    values = es.values if hasattr(es, "values") else np.asarray(es)
    n = len(values)
    gaps = values[:-1] - values[1:]
    rhos = [float(rho)] if np.isscalar(rho) else [float(r) for r in rho]
    if any(r <= 0 for r in rhos):
        raise ValueError("rho must be positive")
    thresholds = {r: c * n ** (-1.0 - r) for r in rhos}
    counts = {r: int(np.count_nonzero(gaps <= t)) for r, t in thresholds.items()}
    second = {r: bool(n > 2 and gaps[1] <= t) for r, t in thresholds.items()}
    return GapStats(gaps, float(gaps.min()) if gaps.size else math.inf, thresholds, counts, second)


# -- variance decomposition and the I_i functional ------------------------


@dataclass(frozen=True)
class VarianceDecomposition:
    variance: float
    variance_se: float
    decomposition: float
    decomposition_se: float
    difference_se: float
    exact: bool = False

    @property
    def agrees(self):
        if self.exact:
            return abs(self.variance - self.decomposition) <= 1e-12 * max(1.0, abs(self.variance))
        return abs(self.variance - self.decomposition) <= 3.0 * self.difference_se


def _swap_slot(x, src, i):
    out = x.copy()
    out[i] = src[i]
    return out


def variance_decomposition_check(f, chain_builder, m_samples):
    """Monte Carlo estimates of Var f(X) and of
    1/2 sum_i E[(f(X) - f(X^(s_i))) (f(X^{s([i-1])}) - f(X^{s([i])}))]
    with s the replicate's random slot order.

    ``chain_builder(r)`` returns the replicate's PermutationChain; its base,
    prime and sigma are used. Var is estimated by (f(X) - f(X'))^2 / 2
    on the same replicate, so ``difference_se`` is the paired standard error.
    """
    if m_samples < 100:
        raise ValueError("m_samples must be at least 100")
    var_terms, dec_terms = [], []
    for r in range(m_samples):
        chain = chain_builder(r)
        n = chain.n_slots
        fx = f(chain_matrix(chain, 0))
        prefix = [fx]
        for i in range(1, n + 1):
            prefix.append(f(chain_matrix(chain, i)))
        base = _raw(chain.base)
        prime = _raw(chain.prime)
        total = []
        for i in range(n):
            fxi = f(_wrap(chain.base, _swap_slot(base, prime, chain.sigma[i])))
            total.append((fx - fxi) * (prefix[i] - prefix[i + 1]))
        dec_terms.append(0.5 * math.fsum(total))
        var_terms.append(0.5 * (fx - prefix[n]) ** 2)
    v, v_se = mean_se(var_terms)
    d, d_se = mean_se(dec_terms)
    _, diff_se = mean_se(np.subtract(dec_terms, var_terms))
    return VarianceDecomposition(v, v_se, d, d_se, diff_se)


def _raw(x):
    return x.data if isinstance(x, SymMatrix) else np.asarray(x, dtype=float)


def _wrap(like, data):
    return SymMatrix(like.n, data) if isinstance(like, SymMatrix) else data


def variance_decomposition_exact(f, support, probs, slots, n=None):
    """Both sides of the decomposition by exhaustive enumeration.

    Coordinates are i.i.d. on the two-point ``support`` with probabilities
    ``probs``. With ``n`` given, f receives a SymMatrix of that dimension
    (``slots`` must equal n(n+1)/2); otherwise it receives the entry vector.
    """
    if len(support) != 2 or len(probs) != 2 or not math.isclose(sum(probs), 1.0):
        raise ValueError("two-point law required")
    if n is not None and n_slots(n) != slots:
        raise ValueError("slots must match the matrix dimension")
    if slots > 10:
        raise ValueError("exhaustive enumeration limited to 10 slots")
    configs = np.arange(2**slots)
    bits = (configs[:, None] >> np.arange(slots)) & 1
    values = np.where(bits == 1, support[1], support[0]).astype(float)
    ones = bits.sum(axis=1)
    weight = probs[1] ** ones * probs[0] ** (slots - ones)
    table = np.array([f(SymMatrix(n, row) if n is not None else row) for row in values], dtype=float)

    mean = math.fsum(weight * table)
    variance = math.fsum(weight * (table - mean) ** 2)

    x, xp = np.meshgrid(configs, configs, indexing="ij")
    x, xp = x.ravel(), xp.ravel()
    w = weight[x] * weight[xp]
    fx = table[x]
    terms = []
    for i in range(slots):
        bit = 1 << i
        x_single = (x & ~bit) | (xp & bit)
        lower = (1 << i) - 1
        upper = (1 << (i + 1)) - 1
        x_before = (xp & lower) | (x & ~lower)
        x_after = (xp & upper) | (x & ~upper)
        terms.append(w * (fx - table[x_single]) * (table[x_before] - table[x_after]))
    decomposition = 0.5 * math.fsum(np.concatenate(terms))
    return VarianceDecomposition(variance, 0.0, decomposition, 0.0, 0.0, exact=True)


@dataclass(frozen=True, eq=False)
class ISequence:
    n_slots: int
    steps: np.ndarray
    values: np.ndarray
    mc_stderr: np.ndarray
    variance_estimate: float
    variance_se: float
    samples: np.ndarray = field(repr=False, default=None)


def estimate_I_sequence(f, chain_builder, steps, m_samples):
    """Monte Carlo I_i for each 1-based step i.

    Each replicate draws a fresh (X, X', X'', sigma, j) through
    ``chain_builder(r)``; all requested steps are evaluated on that replicate.
    """
    if m_samples < 100:
        raise ValueError("m_samples must be at least 100")
    steps = np.asarray(sorted(set(int(s) for s in steps)), dtype=np.int64)
    products = np.empty((m_samples, steps.size))
    var_terms = np.empty(m_samples)
    n = None
    for r in range(m_samples):
        chain = chain_builder(r)
        n = chain.n_slots
        if steps.size and (steps[0] < 1 or steps[-1] > n):
            raise ValueError(f"steps must lie in [1, {n}]")
        fx = f(chain_matrix(chain, 0))
        first = fx - f(chain_matrix(chain, 0, True))
        for c, i in enumerate(steps):
            products[r, c] = first * (f(chain_matrix(chain, i - 1)) - f(chain_matrix(chain, i - 1, True)))
        var_terms[r] = 0.5 * (fx - f(chain_matrix(chain, n))) ** 2
    stats = [mean_se(products[:, c]) for c in range(steps.size)]
    v, v_se = mean_se(var_terms)
    return ISequence(
        n,
        steps,
        np.array([s[0] for s in stats]),
        np.array([s[1] for s in stats]),
        v,
        v_se,
        products,
    )


def linear_statistic(x):
    """f(X) = sum of the independent entries."""
    return math.fsum(_raw(x))


@dataclass(frozen=True)
class MonotonicityReport:
    violations: list

    @property
    def passed(self):
        return not self.violations


def monotonicity_check(iseq):
    """Adjacent requested steps where I_i < I_{i+1} - 3 * combined SE."""
    if iseq.steps.size < 2:
        raise ValueError("need at least two steps")
    bad = []
    for c in range(iseq.steps.size - 1):
        a, b = iseq.values[c], iseq.values[c + 1]
        se = math.hypot(iseq.mc_stderr[c], iseq.mc_stderr[c + 1])
        if a < b - 3.0 * se:
            bad.append((int(iseq.steps[c]), int(iseq.steps[c + 1]), float(a), float(b), float(se)))
    return MonotonicityReport(bad)


def superconcentration_bound(iseq):
    """((n+1)/n) * 2 Var(f) / k at each requested step k, and its SE."""
    n = iseq.n_slots
    coef = (n + 1) / n * 2.0 / iseq.steps
    return coef * iseq.variance_estimate, coef * iseq.variance_se


def superconcentration_check(iseq):
    """Steps where I_k exceeds the bound by more than 3 joint standard errors."""
    bound, bound_se = superconcentration_bound(iseq)
    se = np.hypot(iseq.mc_stderr, bound_se)
    over = iseq.values > bound + 3.0 * se
    return [int(k) for k in iseq.steps[over]]


# -- perturbation sandwich ------------------------------------------------


@dataclass(frozen=True)
class SandwichReport:
    z: float
    delta: float
    lower: float
    upper: float
    eps0: float
    degenerate: bool
    top_separation: float

    @property
    def holds(self):
        return self.lower - self.eps0 <= self.delta <= self.upper + self.eps0

    @property
    def slack(self):
        """Smallest distance to either edge of the bracket (negative when broken)."""
        return min(self.delta - (self.lower - self.eps0), self.upper + self.eps0 - self.delta)


def sandwich_allowance(n, q, c=10.0, d=2.0):
    """eps_0 = C L^D / (q^3 N^2)."""
    return c * control_parameter(n) ** d / (q**3 * n**2)


def perturbation_sandwich_check(a, i, j, value_source, q, c=10.0, d=2.0, es_a=None):
    """Compare lambda_2(A) - lambda_2(B_(ij)) with Z u_i u_j and Z v_i v_j.

    ``es_a`` may carry a precomputed decomposition of ``a``.
    """
    if i > j:
        i, j = j, i
    es_a = eigendecompose(a) if es_a is None else es_a
    b = single_entry_replace(a, i, j, value_source)
    es_b = eigendecompose(b)
    v, deg_a = second_top_vector(es_a)
    u, deg_b = second_top_vector(es_b)
    idx = packed_index(a.n, i, j)
    z = (a.data[idx] - value_source.data[idx]) * (2.0 if i != j else 1.0)
    delta = float(es_a.values[1] - es_b.values[1])
    return SandwichReport(
        z=float(z),
        delta=delta,
        lower=float(z * u[i] * u[j]),
        upper=float(z * v[i] * v[j]),
        eps0=sandwich_allowance(a.n, q, c, d),
        degenerate=deg_a or deg_b,
        top_separation=float(min(es_a.values[0] - es_a.values[1], es_b.values[0] - es_b.values[1])),
    )


# -- resolvent statistics -------------------------------------------------


def _spectral_weights(es, z):
    return 1.0 / (es.values - z.z)


def resolvent_difference_stat(es, es_k, z):
    """max_ij N eta |R^[k](z)_ij - R(z)_ij| from the two spectral sums."""
    if es.n != es_k.n:
        raise ValueError("dimension mismatch")
    if es_k is es:
        return 0.0
    r = (es.vectors.T * _spectral_weights(es, z)) @ es.vectors
    rk = (es_k.vectors.T * _spectral_weights(es_k, z)) @ es_k.vectors
    return float(es.n * z.eta * np.max(np.abs(rk - r)))


def at_second_eigenvalue(es, eta):
    """z = lambda_2 + i eta."""
    return ComplexPoint(float(es.values[1]), eta)


def resolvent_eigvec_stat(es, z):
    """max_ij N |eta Im R(z)_ij - v_2(i) v_2(j)|.

    eta Im R(z) = sum_m w_m v_m v_m^T with w_m = eta^2 / ((lambda_m - E)^2 + eta^2),
    evaluated in that real form.
    """
    dist = es.values - z.e
    w = z.eta**2 / (dist * dist + z.eta**2)
    v2 = es.vectors[1]
    s = (es.vectors.T * w) @ es.vectors - np.outer(v2, v2)
    return float(es.n * np.max(np.abs(s)))


def eigenvalue_shift_stat(es, es_k):
    """|lambda_2 - lambda_2^[k]|."""
    if es.n != es_k.n:
        raise ValueError("dimension mismatch")
    return abs(float(es.values[1] - es_k.values[1]))


def second_gap(es):
    """Distance from lambda_2 to the rest of the spectrum."""
    vals = es.values
    gaps = [vals[0] - vals[1]]
    if es.n > 2:
        gaps.append(vals[1] - vals[2])
    return float(min(gaps))

