import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noisesens.experiments import make_chain_builder, second_eigenvalue
from noisesens.models import ModelKind, ModelSpec, RandomSource, SymMatrix, control_parameter, n_slots, sample
from noisesens.sensitivity import (
    ISequence,
    delocalization_stat,
    eigenvalue_shift_stat,
    estimate_I_sequence,
    gap_statistics,
    linear_statistic,
    mean_se,
    monotonicity_check,
    overlap,
    perturbation_sandwich_check,
    predicted_top_eigenvalue,
    resolvent_difference_stat,
    resolvent_eigvec_stat,
    rigidity_bound,
    rigidity_profile,
    sandwich_allowance,
    second_gap,
    superconcentration_bound,
    superconcentration_check,
    variance_decomposition_check,
    variance_decomposition_exact,
)
from noisesens.spectral import ComplexPoint, eigendecompose, semicircle_table


def test_mean_se():
    m, se = mean_se([1.0, 2.0, 3.0, 4.0])
    assert m == 2.5
    assert se == pytest.approx(math.sqrt(5 / 3 / 4))
    assert math.isnan(mean_se([])[0]) and math.isnan(mean_se([1.0])[1])


@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=50), st.randoms())
def test_mean_se_order_independent(xs, rnd):
    ys = list(xs)
    rnd.shuffle(ys)
    a, b = mean_se(xs), mean_se(ys)
    assert a[0] == b[0]
    assert a[1] == pytest.approx(b[1], rel=1e-12, abs=1e-12)


def test_overlap():
    v = np.array([0.6, 0.8])
    r = overlap(v, v)
    assert r.inner == pytest.approx(1.0) and r.alignment == 0.0
    r = overlap(v, -v)
    assert r.inner == pytest.approx(-1.0) and r.abs_inner == pytest.approx(1.0) and r.alignment == 0.0
    r = overlap(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    assert r.abs_inner == 0.0 and r.alignment == pytest.approx(math.sqrt(2))
    with pytest.raises(ValueError):
        overlap(np.array([1.0, 1.0]), v)
    with pytest.raises(ValueError):
        overlap(np.array([1.0]), v)


def test_delocalization_flat_top():
    n = 50
    es = eigendecompose(np.ones((n, n)) + 1e-3 * np.diag(np.arange(n)))
    d = delocalization_stat(es)
    assert d.top_deviation < 1e-3
    assert d.bound == pytest.approx(math.log(n) ** 4 / math.sqrt(n))


def test_predicted_top_eigenvalue():
    # frozen from mpmath: zeta q + 1/(zeta q) at N = 1000, q = N^0.45
    assert predicted_top_eigenvalue(ModelSpec.er(1000, 0.45)) == pytest.approx(31.729500985668849, rel=1e-12)
    shifted = ModelSpec.er(1000, 0.45, kind=ModelKind.SPARSE_SHIFTED, f=20.0)
    assert predicted_top_eigenvalue(shifted) == pytest.approx(20.05)
    with pytest.raises(ValueError):
        predicted_top_eigenvalue(ModelSpec.er(1000, 0.45, kind=ModelKind.ER_CENTERED))


def test_rigidity_bound_formula():
    n, q = 100, 5.0
    b = rigidity_bound(n, q, exponent=1.0)
    assert b.shape == (n - 1,)
    assert math.isinf(b[-1])
    # i = 10: min(10, 90) = 10
    expect = control_parameter(n) * (n ** (-2 / 3) * 10 ** (-1 / 3) + q**-2)
    assert b[8] == pytest.approx(expect, rel=1e-14)


def test_rigidity_profile():
    t = semicircle_table(10)
    prof = rigidity_profile(t.gamma, t, q=None, exponent=0.0)
    assert prof.fraction_within == 1.0
    assert np.all(prof.deviation == 0)
    with pytest.raises(ValueError):
        rigidity_profile(np.zeros(5), t)


def test_gap_statistics():
    vals = np.array([3.0, 1.0, 0.999, 0.0])
    g = gap_statistics(vals, c=1.0, rho=[0.5, 3.0])
    assert g.min_gap == pytest.approx(0.001)
    # thresholds 4^-1.5 = 0.125 and 4^-4 = 0.0039
    assert g.tail_counts == {0.5: 1, 3.0: 1}
    assert g.second_gap_small == {0.5: True, 3.0: True}
    g = gap_statistics(vals, c=1.0, rho=10.0)
    assert g.second_gap_small == {10.0: False}
    with pytest.raises(ValueError):
        gap_statistics(vals, c=0.0, rho=1.0)
    with pytest.raises(ValueError):
        gap_statistics(vals, c=1.0, rho=0.0)


def test_variance_decomposition_exact_linear():
    # sum of 6 Rademacher variables: Var = 6 exactly
    res = variance_decomposition_exact(lambda x: float(np.sum(x)), (-1.0, 1.0), (0.5, 0.5), 6)
    assert res.variance == pytest.approx(6.0, abs=1e-12)
    assert res.agrees


def test_variance_decomposition_exact_nonlinear():
    f = lambda x: float(np.max(x) * x[0] + x[1] ** 3)  # noqa: E731
    res = variance_decomposition_exact(f, (-0.5, 2.0), (0.3, 0.7), 5)
    assert abs(res.variance - res.decomposition) < 1e-12
    with pytest.raises(ValueError):
        variance_decomposition_exact(f, (0, 1), (0.5, 0.5), 11)
    with pytest.raises(ValueError):
        variance_decomposition_exact(f, (0, 1), (0.5, 0.6), 3)


def test_variance_decomposition_mc_linear():
    spec = ModelSpec(ModelKind.WIGNER, 3)
    res = variance_decomposition_check(linear_statistic, make_chain_builder(spec, 1), 2000)
    # Var of the sum of 6 standard normals
    assert abs(res.variance - 6.0) < 4 * res.variance_se
    assert res.agrees


def test_I_sequence_linear_closed_form():
    spec = ModelSpec(ModelKind.WIGNER, 3)
    n = n_slots(3)
    iseq = estimate_I_sequence(linear_statistic, make_chain_builder(spec, 2), range(1, n + 1), 4000)
    closed = 2.0 - (iseq.steps - 1) / n
    assert np.all(np.abs(iseq.values - closed) <= 3 * iseq.mc_stderr)
    assert monotonicity_check(iseq).passed
    assert superconcentration_check(iseq) == []
    with pytest.raises(ValueError):
        estimate_I_sequence(linear_statistic, make_chain_builder(spec, 2), [0], 200)
    with pytest.raises(ValueError):
        estimate_I_sequence(linear_statistic, make_chain_builder(spec, 2), [1], 10)


def _iseq(values, se, var=1.0, var_se=0.0, n=10):
    steps = np.arange(1, len(values) + 1)
    return ISequence(n, steps, np.array(values, float), np.array(se, float), var, var_se)


def test_monotonicity_and_bound_detect_violations():
    assert monotonicity_check(_iseq([1.0, 0.9, 0.8], [0.01] * 3)).passed
    rep = monotonicity_check(_iseq([1.0, 1.5, 0.8], [0.01] * 3))
    assert [v[:2] for v in rep.violations] == [(1, 2)]
    # within 3 SE is tolerated
    assert monotonicity_check(_iseq([1.0, 1.02], [0.01, 0.01])).passed
    bound, _ = superconcentration_bound(_iseq([0, 0], [0, 0], var=2.0, n=10))
    assert np.allclose(bound, [11 / 10 * 4, 11 / 10 * 2])
    assert superconcentration_check(_iseq([4.6, 2.3], [0.01, 0.01], var=2.0)) == [1, 2]
    with pytest.raises(ValueError):
        monotonicity_check(_iseq([1.0], [0.1]))


def test_sandwich_report_fields():
    spec = ModelSpec.er(60, 0.4)
    a = sample(spec, RandomSource(0, 0))
    src = sample(spec, RandomSource(0, 1))
    rep = perturbation_sandwich_check(a, 3, 7, src, spec.q)
    assert rep.z == pytest.approx(2 * (a[3, 7] - src[3, 7]))
    assert rep.eps0 == pytest.approx(sandwich_allowance(60, spec.q))
    diag = perturbation_sandwich_check(a, 4, 4, src, spec.q)
    assert diag.z == pytest.approx(a[4, 4] - src[4, 4])
    swapped = perturbation_sandwich_check(a, 7, 3, src, spec.q)
    assert swapped.delta == rep.delta
    assert rep.slack == pytest.approx(min(rep.delta - rep.lower + rep.eps0, rep.upper + rep.eps0 - rep.delta))


def test_sandwich_top_eigenvalue_variational_bounds():
    # Rayleigh quotients give the same bracket for lambda_1 with no allowance
    rng = np.random.default_rng(3)
    for _ in range(20):
        a = rng.standard_normal((6, 6))
        a = (a + a.T) / 2
        b = a.copy()
        b[1, 4] = b[4, 1] = rng.standard_normal()
        ea, eb = eigendecompose(a), eigendecompose(b)
        z = 2 * (a[1, 4] - b[1, 4])
        delta = ea.values[0] - eb.values[0]
        v, u = ea.vectors[0], eb.vectors[0]
        assert z * u[1] * u[4] - 1e-12 <= delta <= z * v[1] * v[4] + 1e-12


def test_resolvent_statistics():
    spec = ModelSpec.er(80, 0.4)
    es = eigendecompose(sample(spec, RandomSource(4, 0)))
    z = ComplexPoint(float(es.values[1]), 1e-3)
    assert resolvent_difference_stat(es, es, z) == 0.0
    es_copy = eigendecompose(sample(spec, RandomSource(4, 0)))
    assert resolvent_difference_stat(es, es_copy, z) == 0.0
    g = second_gap(es)
    stats = [resolvent_eigvec_stat(es, ComplexPoint(float(es.values[1]), g / f)) for f in (10, 100, 1000)]
    assert stats[0] > stats[1] > stats[2]
    assert eigenvalue_shift_stat(es, es) == 0.0
    assert g == pytest.approx(min(es.values[0] - es.values[1], es.values[1] - es.values[2]))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_eigvec_stat_closed_form(seed):
    # N |eta Im R - v2 v2^T| computed from a dense complex solve
    a = np.random.default_rng(seed).standard_normal((8, 8))
    a = (a + a.T) / 2
    es = eigendecompose(a)
    z = ComplexPoint(float(es.values[1]), 0.05)
    r = np.linalg.inv(a - z.z * np.eye(8))
    ref = 8 * np.max(np.abs(z.eta * r.imag - np.outer(es.vectors[1], es.vectors[1])))
    assert resolvent_eigvec_stat(es, z) == pytest.approx(ref, rel=1e-8, abs=1e-12)


def test_second_eigenvalue_statistic():
    x = SymMatrix.from_dense(np.diag([1.0, 5.0, 3.0]))
    assert second_eigenvalue(x) == 3.0
