import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from inelastic_hermite.basis import (
    ExpansionCenter,
    InvalidCenterError,
    MultiIndex,
    SpectralState,
    basis_eval,
    enumerate_indices,
    hermite_coeff,
    hermite_eval_1d,
    hermite_eval_table,
    index_set,
    largest_hermite_root,
    n_basis,
    project,
    project_coeffs,
    rank,
    unrank,
)
from conftest import random_state_coeffs


def test_rank_examples():
    assert [rank(a) for a in [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (2, 0, 0)]] == [0, 1, 2, 3, 4]
    assert rank((0, 0, 2)) == 9
    assert MultiIndex(2, 1, 0).rank == rank((2, 1, 0))


def test_rank_unrank_inverse_to_degree_40():
    idx = enumerate_indices(40)
    assert len(idx) == n_basis(40)
    for r, a in enumerate(idx):
        assert rank(a) == r
    for r in range(0, n_basis(40), 97):
        assert tuple(unrank(r)) == idx[r]


def test_n_basis_counts_degree_m():
    assert n_basis(0) == 1
    assert n_basis(2) == 10
    assert n_basis(30) == 5456


def test_multi_index_rejects_negative():
    with pytest.raises(ValueError):
        MultiIndex(-1, 0, 0)


def test_index_set_neighbours():
    ids = index_set(3)
    r = rank((1, 1, 0))
    assert ids.up[0, r] == rank((2, 1, 0))
    assert ids.down[1, r] == rank((1, 0, 0))
    assert ids.down2[0, r] == -1
    assert ids.up[2, rank((0, 0, 3))] == -1
    with pytest.raises(ValueError):
        ids.up[0, 0] = 5


@pytest.mark.parametrize("n, x, want", [(0, 3.7, 1.0), (2, 0.0, -1.0), (3, 2.0, 2.0)])
def test_hermite_eval_examples(n, x, want):
    assert hermite_eval_1d(n, x) == pytest.approx(want, abs=1e-15)


@pytest.mark.parametrize("n, k, want", [(2, 0, -1), (3, 1, -3), (4, 2, -6), (4, 0, 3), (4, 1, 0), (3, 5, 0)])
def test_hermite_coeff_examples(n, k, want):
    assert hermite_coeff(n, k) == want


def test_coefficient_table_matches_recurrence():
    x = np.linspace(-3, 3, 13)
    for n in range(12):
        poly = sum(hermite_coeff(n, k) * x**k for k in range(n + 1))
        assert np.allclose(poly, hermite_eval_1d(n, x), rtol=1e-12, atol=1e-9)


def test_basis_eval_examples():
    c = ExpansionCenter((1.0, 0.0, 0.0), 4.0)
    assert basis_eval((0, 0, 0), c, (0.3, -2.0, 5.0)) == 1.0
    assert basis_eval((2, 0, 0), ExpansionCenter(), (0.0, 0.0, 0.0)) == -1.0
    assert basis_eval((1, 1, 0), c, (3.0, 2.0, 0.0)) == pytest.approx(1.0)


def test_weighted_basis_is_unit_gaussian_at_origin():
    c = ExpansionCenter((0.0, 0.0, 0.0), 2.0)
    want = (2 * math.pi * 2.0) ** -1.5
    assert basis_eval((0, 0, 0), c, (0.0, 0.0, 0.0), weighted=True) == pytest.approx(want)


@pytest.mark.parametrize("n, want", [(2, 1.0), (3, math.sqrt(3)), (4, math.sqrt(3 + math.sqrt(6)))])
def test_largest_root_examples(n, want):
    assert largest_hermite_root(n) == pytest.approx(want, abs=1e-12)


def test_largest_root_is_a_root():
    for n in (5, 10, 21, 41):
        r = largest_hermite_root(n)
        scale = max(abs(hermite_eval_1d(n - 1, r)) * n, 1.0)
        assert abs(hermite_eval_1d(n, r)) < 1e-10 * scale


def test_center_validation():
    with pytest.raises(InvalidCenterError):
        ExpansionCenter((0, 0, 0), 0.0)
    with pytest.raises(InvalidCenterError):
        ExpansionCenter((0, 0, 0), -1.0)


def test_orthogonality_by_gauss_hermite():
    # weight exp(-x^2/2): scaled physicists' rule
    x, w = np.polynomial.hermite_e.hermegauss(12)
    w = w / math.sqrt(2 * math.pi)
    c = ExpansionCenter((0.3, -0.5, 1.0), 1.7)
    g = np.stack(np.meshgrid(x, x, x, indexing="ij"), -1).reshape(-1, 3)
    wt = np.einsum("i,j,k->ijk", w, w, w).ravel()
    v = np.asarray(c.u_bar) + math.sqrt(c.t_bar) * g
    al = index_set(6).alphas
    vals = np.stack([basis_eval(a, c, v) for a in al])
    gram = (vals * wt) @ vals.T
    fact = index_set(6).factorial
    assert np.allclose(gram, np.diag(fact), atol=1e-10 * fact.max())


@given(
    st.tuples(*[st.integers(0, 5)] * 3),
    st.lists(st.floats(-2, 2), min_size=3, max_size=3),
    st.lists(st.floats(-1, 1), min_size=3, max_size=3),
    st.floats(0.5, 2.0),
    st.integers(0, 2),
)
def test_recurrence_and_derivative(alpha, v, u, t, d):
    c = ExpansionCenter(tuple(u), t)
    v = np.array(v)
    a = np.array(alpha)
    ed = np.eye(3, dtype=int)[d]
    h = basis_eval(a, c, v)
    up = basis_eval(a + ed, c, v)
    down = basis_eval(a - ed, c, v) if a[d] > 0 else 0.0
    xd = (v[d] - u[d]) / math.sqrt(t)
    # recurrence: H_{a+e_d} = x_d H_a - a_d H_{a-e_d}
    assert up == pytest.approx(xd * h - a[d] * down, rel=1e-10, abs=1e-10)
    # derivative in v_d: a_d / sqrt(T) H_{a-e_d}
    eps = 1e-6
    vp, vm = v.copy(), v.copy()
    vp[d] += eps
    vm[d] -= eps
    deriv = (basis_eval(a, c, vp) - basis_eval(a, c, vm)) / (2 * eps)
    assert deriv == pytest.approx(a[d] / math.sqrt(t) * down, rel=1e-6, abs=1e-6)


def test_project_same_center_is_identity(rng):
    s = SpectralState(random_state_coeffs(rng, 4), ExpansionCenter((0.2, 0, 0), 1.3))
    assert np.array_equal(project(s, s.center).coeffs, s.coeffs)


def test_project_shifted_gaussian():
    s = SpectralState.maxwellian(3)
    out = project(s, ExpansionCenter((0.5, 0.0, 0.0), 1.0))
    assert out.coeffs[rank((1, 0, 0))] == pytest.approx(-0.5, abs=1e-15)
    assert out.coeffs[rank((2, 0, 0))] == pytest.approx(0.125, abs=1e-15)
    assert out.coeffs[rank((3, 0, 0))] == pytest.approx(-0.5**3 / 6, abs=1e-15)


def test_project_temperature_change():
    # unit Gaussian seen from T=2: f_{2e_1} = (1 - 2) / (2 * 2)
    out = project(SpectralState.maxwellian(2), ExpansionCenter((0, 0, 0), 2.0))
    assert out.coeffs[rank((2, 0, 0))] == pytest.approx(-0.25, abs=1e-15)


def test_project_matches_moment_quadrature(rng):
    # coefficients at the new center equal (1/alpha!) int f H_alpha dv
    x, w = np.polynomial.hermite_e.hermegauss(14)
    w = w / math.sqrt(2 * math.pi)
    src = ExpansionCenter((0.1, -0.2, 0.0), 1.2)
    dst = ExpansionCenter((-0.3, 0.4, 0.2), 0.8)
    m = 4
    c = random_state_coeffs(rng, m, 0.2)
    g = np.stack(np.meshgrid(x, x, x, indexing="ij"), -1).reshape(-1, 3)
    wt = np.einsum("i,j,k->ijk", w, w, w).ravel()
    v = np.asarray(src.u_bar) + math.sqrt(src.t_bar) * g
    al = index_set(m).alphas
    f_over_w = sum(ci * basis_eval(a, src, v) for ci, a in zip(c, al))
    want = np.array([np.sum(wt * f_over_w * basis_eval(a, dst, v)) for a in al]) / index_set(m).factorial
    got = project(SpectralState(c, src), dst).coeffs
    assert np.allclose(got, want, atol=1e-12)


@given(st.integers(0, 10), st.integers(0, 2**31))
def test_project_round_trip(m, seed):
    r = np.random.default_rng(seed)
    c1 = ExpansionCenter(tuple(r.uniform(-1, 1, 3)), r.uniform(0.5, 2))
    c2 = ExpansionCenter(tuple(r.uniform(-1, 1, 3)), r.uniform(0.5, 2))
    s = SpectralState(random_state_coeffs(r, m, 0.1), c1)
    back = project(project(s, c2), c1)
    assert np.allclose(back.coeffs, s.coeffs, rtol=1e-12, atol=1e-12)


def test_project_rejects_bad_target():
    with pytest.raises(InvalidCenterError):
        project_coeffs(np.ones(4), np.zeros(3), 1.0, np.zeros(3), -1.0)
    with pytest.raises(InvalidCenterError):
        project(SpectralState.maxwellian(1), (0, 1))


def test_hermite_table_shape():
    assert hermite_eval_table(4, np.zeros((2, 3))).shape == (5, 2, 3)


def test_state_rejects_incomplete_size():
    with pytest.raises(ValueError):
        SpectralState(np.ones(5))
