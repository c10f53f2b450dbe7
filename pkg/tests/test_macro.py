import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from inelastic_hermite.basis import ExpansionCenter, SpectralState, basis_eval, index_set, n_basis, project, rank
from inelastic_hermite.macro import NonPositiveStateError, local_center_of, macro_fields, macro_from_state
from conftest import random_state_coeffs


def moments_by_quadrature(state):
    """rho, u, theta, sigma, q by Gauss-Hermite integration of the weighted expansion."""
    x, w = np.polynomial.hermite_e.hermegauss(8)
    w = w / math.sqrt(2 * math.pi)
    c = state.center
    g = np.stack(np.meshgrid(x, x, x, indexing="ij"), -1).reshape(-1, 3)
    wt = np.einsum("i,j,k->ijk", w, w, w).ravel()
    v = np.asarray(c.u_bar) + math.sqrt(c.t_bar) * g
    f = sum(ci * basis_eval(a, c, v) for ci, a in zip(state.coeffs, index_set(state.m).alphas)) * wt
    rho = f.sum()
    u = (f[:, None] * v).sum(0) / rho
    cc = v - u
    c2 = (cc * cc).sum(1)
    theta = (f * c2).sum() / (3 * rho)
    sigma = np.einsum("p,pi,pj->ij", f, cc, cc) - rho * theta * np.eye(3)
    q = 0.5 * np.einsum("p,pi,p->i", f, cc, c2)
    return rho, u, theta, sigma, q


def test_maxwellian_fields():
    ms = macro_from_state(SpectralState.maxwellian(3, rho=2.0))
    assert ms.rho == 2.0 and ms.theta == 1.0
    assert np.all(ms.u == 0) and np.all(ms.sigma == 0) and np.all(ms.q == 0)


def test_velocity_shift_example():
    c = np.zeros(n_basis(2))
    c[0], c[rank((1, 0, 0))] = 1.0, 0.5
    ms = macro_from_state(SpectralState(c))
    assert ms.u[0] == pytest.approx(0.5)
    assert ms.theta == pytest.approx(1 - 0.25 / 3, abs=1e-15)


@given(st.integers(0, 2**31), st.integers(3, 5))
def test_fields_match_quadrature(seed, m):
    r = np.random.default_rng(seed)
    center = ExpansionCenter(tuple(r.uniform(-1, 1, 3)), r.uniform(0.5, 2))
    s = SpectralState(random_state_coeffs(r, m, 0.05), center)
    got = macro_from_state(s)
    rho, u, theta, sigma, q = moments_by_quadrature(s)
    assert got.rho == pytest.approx(rho, rel=1e-12)
    assert np.allclose(got.u, u, atol=1e-12)
    assert got.theta == pytest.approx(theta, rel=1e-11)
    assert np.allclose(got.sigma, sigma, atol=1e-11)
    assert np.allclose(got.q, q, atol=1e-11)


@given(st.integers(0, 2**31))
def test_fields_are_center_covariant(seed):
    r = np.random.default_rng(seed)
    s = SpectralState(random_state_coeffs(r, 5, 0.05), ExpansionCenter((0.2, 0, -0.1), 1.1))
    t = project(s, ExpansionCenter(tuple(r.uniform(-1, 1, 3)), r.uniform(0.5, 2)))
    a, b = macro_from_state(s), macro_from_state(t)
    assert a.theta == pytest.approx(b.theta, rel=1e-12)
    assert np.allclose(a.u, b.u, atol=1e-12)
    assert np.allclose(a.sigma, b.sigma, atol=1e-12)
    assert np.allclose(a.q, b.q, atol=1e-12)


def test_local_frame_coefficients(rng):
    s = SpectralState(random_state_coeffs(rng, 5, 0.1), ExpansionCenter((0.3, 0.0, 0.0), 1.4))
    loc = project(s, local_center_of(s))
    f = loc.coeffs
    assert np.max(np.abs(f[1:4])) < 1e-12
    assert abs(f[rank((2, 0, 0))] + f[rank((0, 2, 0))] + f[rank((0, 0, 2))]) < 1e-12


def test_local_center_of_shifted_gaussian():
    s = project(SpectralState.maxwellian(3), ExpansionCenter((0.5, 0.0, 0.0), 1.0))
    back = local_center_of(s)
    assert back.u_bar == pytest.approx((0.0, 0.0, 0.0), abs=1e-12)
    assert back.t_bar == pytest.approx(1.0, abs=1e-12)
    shifted = project(SpectralState.maxwellian(3), ExpansionCenter((-0.5, 0.0, 0.0), 1.0))
    moved = local_center_of(SpectralState(shifted.coeffs, ExpansionCenter()))
    assert moved.u_bar == pytest.approx((0.5, 0.0, 0.0), abs=1e-12)
    assert moved.t_bar == pytest.approx(1.0, abs=1e-12)


def test_nonpositive_errors():
    c = np.zeros(n_basis(2))
    with pytest.raises(NonPositiveStateError):
        macro_from_state(SpectralState(c))
    c[0] = 1.0
    c[rank((2, 0, 0))] = c[rank((0, 2, 0))] = c[rank((0, 0, 2))] = -1.0
    with pytest.raises(NonPositiveStateError):
        local_center_of(SpectralState(c))


def test_vectorized_rows_and_truncated_input(rng):
    rows = np.stack([random_state_coeffs(rng, 4, 0.05) for _ in range(3)])
    rho, u, theta, sigma, q = macro_fields(rows, (0.1, 0, 0), 1.2)
    assert rho.shape == (3,) and sigma.shape == (3, 3, 3)
    single = macro_from_state(SpectralState(rows[1], ExpansionCenter((0.1, 0, 0), 1.2)))
    assert theta[1] == pytest.approx(single.theta)
    # order-1 input behaves as if padded with zeros
    r1 = macro_fields(rows[:, : n_basis(1)], (0, 0, 0), 1.0)
    assert np.allclose(r1[2], 1.0 - np.sum(rows[:, 1:4] ** 2, 1) / rows[:, 0] ** 2 / 3)
