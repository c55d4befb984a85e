import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from noisesens import spectral
from noisesens.models import SymMatrix
from noisesens.spectral import (
    ComplexPoint,
    EigenConvergenceError,
    eigendecompose,
    eigenvalues,
    is_degenerate,
    msc,
    resolvent_direct,
    resolvent_entry,
    resolvent_matrix,
    second_top_vector,
    semicircle_density,
    semicircle_table,
    semicircle_tail,
)


def _sym(n, seed, scale=1.0):
    a = np.random.default_rng(seed).standard_normal((n, n)) * scale
    return (a + a.T) / 2


def _check_invariants(a, es, tol):
    v, lam = es.vectors, es.values
    n = a.shape[0]
    assert np.all(np.diff(lam) <= 0)
    assert np.max(np.abs(v @ v.T - np.eye(n))) < tol
    assert np.max(np.abs(v.T @ np.diag(lam) @ v - a)) < tol * max(1.0, np.abs(a).max())
    assert es.residual_norm < tol * max(1.0, np.abs(a).max())


@pytest.mark.parametrize("n", [1, 2, 3, 7, 50, 200])
def test_decomposition_invariants(n):
    a = _sym(n, n)
    _check_invariants(a, eigendecompose(a), 1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.integers(0, 2**32), st.sampled_from([1e-150, 1e-5, 1.0, 1e8, 1e150]))
def test_decomposition_invariants_property(n, seed, scale):
    a = _sym(n, seed, scale)
    es = eigendecompose(a)
    v, lam = es.vectors, es.values
    assert np.max(np.abs(v @ v.T - np.eye(n))) < 1e-10
    assert np.max(np.abs(v.T @ np.diag(lam) @ v - a)) <= 1e-10 * np.abs(a).max()


@pytest.mark.parametrize("n", range(1, 9))
def test_eigenvalues_match_charpoly_oracle(n):
    a = _sym(n, 100 + n)
    ref = oracles.sturm_eigenvalues(a)
    assert np.max(np.abs(eigendecompose(a).values - ref)) < 1e-9
    assert np.max(np.abs(eigenvalues(a) - ref)) < 1e-9


def test_structured_matrices():
    for a in (np.zeros((5, 5)), np.eye(6), np.diag([3.0, -1.0, 2.0, 2.0]), np.ones((4, 4))):
        es = eigendecompose(a)
        _check_invariants(a, es, 1e-12)
    # path-graph Laplacian-like tridiagonal with known spectrum 2 cos(pi k/(n+1))
    n = 30
    t = np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)
    expect = 2 * np.cos(np.pi * np.arange(1, n + 1) / (n + 1))
    assert np.max(np.abs(eigenvalues(t) - expect)) < 1e-12


def test_symmatrix_input_and_validation():
    a = _sym(5, 1)
    a = (a + a.T) / 2
    es1 = eigendecompose(SymMatrix.from_dense(a))
    es2 = eigendecompose(a)
    assert np.array_equal(es1.values, es2.values)
    with pytest.raises(ValueError):
        eigendecompose(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        eigendecompose(np.array([[np.inf]]))


def test_sign_convention():
    es = eigendecompose(_sym(30, 4))
    for v in es.vectors:
        assert v[np.argmax(np.abs(v))] > 0


def test_results_are_read_only():
    es = eigendecompose(_sym(4, 2))
    with pytest.raises(ValueError):
        es.values[0] = 1.0


def test_convergence_error(monkeypatch):
    monkeypatch.setattr(spectral, "MAX_QL_ITER", 0)
    with pytest.raises(EigenConvergenceError) as info:
        eigendecompose(_sym(6, 0))
    assert 0 <= info.value.index < 6


def test_write_csv(tmp_path):
    es = eigendecompose(np.diag([1.0, 3.0, 2.0]))
    es.write_csv(tmp_path / "e.csv")
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines == ["index,value,gap_to_next", "1,3.0,1.0", "2,2.0,1.0", "3,1.0,"]


def test_degeneracy_flags():
    es = eigendecompose(np.diag([5.0, 1.0, 1.0, 0.0]))
    assert is_degenerate(es.values, 2)
    assert second_top_vector(es)[1]
    es = eigendecompose(np.diag([5.0, 2.0, 1.0]))
    assert not is_degenerate(es.values, 2)
    v, flag = second_top_vector(es)
    assert not flag and abs(v[1]) == 1.0


def test_resolvent_matches_direct_solve():
    a = _sym(40, 8)
    es = eigendecompose(a)
    z = ComplexPoint(float(es.values[1]), 1e-3)
    r_spec = resolvent_matrix(es, z)
    r_dir = resolvent_direct(a, z)
    assert np.max(np.abs(r_spec - r_dir)) < 1e-8 * np.max(np.abs(r_dir))
    assert resolvent_entry(es, z, 2, 5) == pytest.approx(r_dir[2, 5], rel=1e-9)
    with pytest.raises(ValueError):
        ComplexPoint(0.0, 0.0)


# frozen: mpmath closed form, cross-checked by quadrature of the density against 1/(x - z)
@pytest.mark.parametrize(
    "z, m",
    [
        (0.5 + 0.1j, -0.23710837400499217 + 0.91962167571728467j),
        (-3 + 0.01j, 0.38195706733594642 + 0.001708150269443704j),
        (2.5 + 1j, -0.35530158488865117 + 0.19855941336636461j),
    ],
)
def test_msc_values(z, m):
    got = msc(ComplexPoint(z.real, z.imag))
    assert abs(got - m) < 1e-13
    assert abs(got * got + z * got + 1) < 1e-13


@settings(max_examples=100)
@given(st.floats(-5, 5), st.floats(1e-6, 5))
def test_msc_upper_half_plane(e, eta):
    m = msc(ComplexPoint(e, eta))
    assert m.imag > 0
    assert abs(m * m + complex(e, eta) * m + 1) < 1e-9 * (1 + abs(m) ** 2)


def test_semicircle_basics():
    assert semicircle_tail(-2.0) == pytest.approx(1.0)
    assert semicircle_tail(2.0) == pytest.approx(0.0, abs=1e-16)
    assert semicircle_tail(0.0) == pytest.approx(0.5)
    x = np.linspace(-2, 2, 20001)
    mass = np.sum(semicircle_density(x)) * (x[1] - x[0])
    assert mass == pytest.approx(1.0, abs=1e-4)


# frozen from scipy.integrate.quad + brentq on the density
@pytest.mark.parametrize(
    "n, i, gamma",
    [
        (10, 1, 1.374097652265081),
        (10, 3, 0.6393830195810091),
        (10, 7, -0.6393830195810074),
        (1000, 1, 1.9718524853052717),
        (1000, 250, 0.8079455065990344),
        (1000, 999, -1.97185248530527),
    ],
)
def test_classical_locations(n, i, gamma):
    assert semicircle_table(n).location(i) == pytest.approx(gamma, abs=1e-10)


@pytest.mark.parametrize("n", [2, 10, 1000])
def test_classical_location_anchors(n):
    t = semicircle_table(n)
    assert abs(t.location(n // 2)) < 1e-10
    assert t.location(n) == pytest.approx(-2.0, abs=1e-10)
    assert np.all(np.diff(t.gamma) < 0)
    # symmetry of the semicircle: gamma_i = -gamma_{N-i}
    assert np.allclose(t.gamma[: n - 1], -t.gamma[n - 2 :: -1], atol=1e-12)


def test_semicircle_table_validation():
    with pytest.raises(ValueError):
        semicircle_table(0)
    assert math.isfinite(semicircle_table(1).location(1))
