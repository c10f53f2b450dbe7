import math
import warnings

import numpy as np
import pytest

from inelastic_hermite.basis import ExpansionCenter, SpectralState, n_basis, project
from inelastic_hermite.coefficients import KernelSpec
from inelastic_hermite.collision import CollisionModelParams
from inelastic_hermite.macro import macro_from_state
from inelastic_hermite.solver import (
    FitQualityWarning,
    ModelConfig,
    SimulationAbort,
    StabilityError,
    collision_dt_cap,
    collision_substep,
    grid_macro,
    haff_curve,
    haff_fit,
    haff_r2,
    heating_exact,
    initial_grid,
    model_params,
    run_haff,
    run_heating,
    run_inhomogeneous,
)
from inelastic_hermite.transport import BoundarySpec, WallSpec
from conftest import random_state_coeffs, tensor_for

MAXWELL_C = 1 / (4 * math.pi)


def test_heating_exact_values():
    assert heating_exact(1.0, 0.01, 0.5, 0.0) == pytest.approx(1.0)
    # frozen from direct evaluation; cross-checked by the ODE below
    assert heating_exact(1.0, 0.01, 0.5, 5.0) == pytest.approx(0.45650102649794, abs=1e-12)
    assert heating_exact(1.0, 0.01, 0.5, 1e4) == pytest.approx(0.08 / 0.75)
    with pytest.raises(ValueError):
        heating_exact(1.0, 0.01, 1.0, 1.0)


@pytest.mark.parametrize("e, eps", [(0.2, 0.01), (0.5, 0.01), (0.8, 0.05)])
def test_heating_exact_solves_the_temperature_ode(e, eps):
    from scipy.integrate import solve_ivp

    # d theta / dt = -(1 - e^2) theta / 4 + 2 eps
    sol = solve_ivp(lambda t, y: -(1 - e * e) * y / 4 + 2 * eps, (0, 5), [1.0], rtol=1e-11, atol=1e-13,
                    t_eval=np.linspace(0, 5, 11))
    assert np.allclose(heating_exact(1.0, eps, e, sol.t), sol.y[0], rtol=1e-9)


def test_haff_fit_synthetic():
    t = np.linspace(0, 5, 51)
    assert haff_fit(t, haff_curve(t, 1.0, 0.3)) == pytest.approx(0.3, abs=1e-6)
    assert haff_fit(t, np.full(t.size, 0.7)) == 0.0
    assert haff_r2(t, haff_curve(t, 2.0, 0.3), 0.3) == pytest.approx(1.0)


def test_haff_fit_warns_on_non_monotone():
    t = np.linspace(0, 5, 20)
    th = haff_curve(t, 1.0, 0.2)
    th[5] *= 1.1
    with pytest.warns(FitQualityWarning):
        haff_fit(t, th)
    with pytest.raises(ValueError):
        haff_fit(t[:5], th[:5])


def test_model_config_validation():
    with pytest.raises(ValueError):
        ModelConfig(KernelSpec.maxwell(0.5), 4, 2)
    with pytest.raises(ValueError):
        ModelConfig(KernelSpec.maxwell(0.5), 2, 2, kn=0.0)


def test_model_params_policies():
    k = KernelSpec.hard_sphere(0.5)
    t = tensor_for(2, k)
    a = model_params(ModelConfig(k, 2, 4), t)
    b = model_params(ModelConfig(k, 2, 4, nu2_policy="matched"), t)
    assert a.nu2 == pytest.approx(b.nu2, rel=1e-12)
    c = model_params(ModelConfig(k, 2, 4, nu1=7.0, nu2=0.5), t)
    assert (c.nu1, c.nu2) == (7.0, 0.5)


def test_substep_elastic_maxwellian_fixed_point():
    k = KernelSpec.hard_sphere(1.0)
    t = tensor_for(3, k)
    p = CollisionModelParams(3, 5, 2.0, 0.0)
    s = SpectralState.maxwellian(5, rho=1.4, center=ExpansionCenter((0.2, 0, 0), 1.3))
    out = collision_substep(s, t, p, 0.05, 1.0)
    assert np.allclose(out.coeffs, s.coeffs, atol=1e-12)


def test_substep_conserves_mass_and_momentum(rng):
    t = tensor_for(3, KernelSpec.hard_sphere(0.6))
    p = CollisionModelParams(3, 6, 2.0, 0.1)
    for _ in range(5):
        s = SpectralState(random_state_coeffs(rng, 6, 0.03), ExpansionCenter(tuple(rng.uniform(-1, 1, 3)), 1.2))
        a = macro_from_state(s)
        b = macro_from_state(collision_substep(s, t, p, 0.02, 0.7))
        assert abs(a.rho - b.rho) <= 1e-12
        assert np.max(np.abs(a.u - b.u)) <= 1e-12


def test_substep_cooling_rate():
    t = tensor_for(2, KernelSpec.maxwell(0.5))
    p = CollisionModelParams(2, 2, 1.0, 0.0)
    s = SpectralState.maxwellian(2)
    dt = 1e-4
    th = macro_from_state(collision_substep(s, t, p, dt, 1.0)).theta
    assert th - 1.0 == pytest.approx(-dt * 0.75 / 4, rel=1e-10)


def test_substep_instability_reported():
    t = tensor_for(2, KernelSpec.maxwell(0.0))
    p = CollisionModelParams(2, 2, 1.0, 0.0)
    with pytest.raises(StabilityError):
        collision_substep(SpectralState.maxwellian(2), t, p, 1e3, 1.0)


def test_collision_dt_cap():
    t = tensor_for(2, KernelSpec.maxwell(0.5))
    p = CollisionModelParams(2, 2, 2.0, 0.0)
    f = SpectralState.maxwellian(2, rho=3.0).coeffs
    assert collision_dt_cap(f, ExpansionCenter(), t, p, 0.5) == pytest.approx(0.9 * 0.5 / (2.0 * 3.0))


def heating_config(e, eps=0.01, dt=1e-3):
    return ModelConfig(KernelSpec.maxwell(e, MAXWELL_C), 2, 2, kn=1.0, problem="heating", t_end=5.0, dt=dt,
                       sample_dt=0.1, epsilon=eps)


def test_heating_matches_closed_form():
    cfg = heating_config(0.5)
    s = run_heating(cfg, tensor_for(2, cfg.kernel))
    assert s.theta[-1] == pytest.approx(0.45650, abs=1e-3)
    exact = heating_exact(1.0, 0.01, 0.5, s.t)
    assert np.max(np.abs(s.theta / exact - 1)) <= 2e-3


def test_elastic_runs_stay_constant():
    k = KernelSpec.maxwell(1.0, MAXWELL_C)
    cfg = ModelConfig(k, 2, 2, t_end=5.0, dt=0.01, sample_dt=0.5, problem="haff")
    assert np.max(np.abs(run_haff(cfg, tensor_for(2, k)).theta - 1.0)) < 1e-8
    cfg.problem = "heating"
    assert np.max(np.abs(run_heating(cfg, tensor_for(2, k), 0.0).theta - 1.0)) < 1e-8


def test_haff_decay_shape():
    k = KernelSpec.hard_sphere(0.8)
    cfg = ModelConfig(k, 4, 6, kn=1 / math.sqrt(2), t_end=5.0, dt=0.01, sample_dt=0.1)
    th = run_haff(cfg, tensor_for(4, k)).theta
    assert np.all(np.diff(th) < 0)
    assert np.all(np.diff(th, 2) > -1e-12)


def test_heating_rejects_negative_epsilon():
    cfg = heating_config(0.5)
    with pytest.raises(ValueError):
        run_heating(cfg, tensor_for(2, cfg.kernel), -1.0)


def inhomogeneous_config(**kw):
    base = dict(kernel=KernelSpec.maxwell(0.7), m0=2, m=4, kn=0.5, problem="inhomogeneous", t_end=0.2,
                cfl=0.2, nx=16)
    base.update(kw)
    return ModelConfig(**base)


def test_uniform_elastic_field_is_stationary():
    cfg = inhomogeneous_config(kernel=KernelSpec.hard_sphere(1.0), u_init=(0.3, 0, 0), theta0=1.2)
    snaps = run_inhomogeneous(cfg, tensor_for(2, cfg.kernel))
    assert np.max(np.abs(snaps[-1][1].cells - snaps[0][1].cells)) < 1e-10


def test_output_times_and_callback():
    cfg = inhomogeneous_config(output_times=[0.05, 0.1], init_kind="sine_x", amplitude=0.1)
    seen = []
    snaps = run_inhomogeneous(cfg, tensor_for(2, cfg.kernel), callback=lambda t, g: seen.append(t))
    assert seen == [0.0, 0.05, 0.1, 0.2]
    assert [t for t, _ in snaps] == seen
    mass = [g.cells[:, 0].sum() for _, g in snaps]
    assert np.allclose(mass, mass[0], rtol=1e-12)


def test_lie_splitting_is_first_order():
    k = KernelSpec.maxwell(0.7)
    t = tensor_for(2, k)

    def final(cfl, strang=False):
        cfg = inhomogeneous_config(cfl=cfl, strang=strang, init_kind="sine_x", amplitude=0.2, u_init=(0.2, 0, 0))
        return run_inhomogeneous(cfg, t)[-1][1].cells

    ref = final(0.0125, True)
    errs = [np.max(np.abs(final(c) - ref)) for c in (0.2, 0.1, 0.05)]
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(orders) >= 0.9, orders


def test_couette_symmetry():
    u0 = 238.377
    walls = BoundarySpec(WallSpec((0, -50 / u0, 0), 1.0), WallSpec((0, 50 / u0, 0), 1.0))
    k = KernelSpec.hard_sphere(1.0)
    cfg = inhomogeneous_config(kernel=k, m0=3, m=4, kn=1.0, nx=20, t_end=1.0, cfl=0.3, boundary=walls)
    t, grid = run_inhomogeneous(cfg, tensor_for(3, k))[-1]
    rho, u, theta, sigma, q = grid_macro(grid)
    assert np.max(np.abs(u[:, 1] + u[::-1, 1])) < 1e-10
    assert u[-1, 1] > 0 > u[0, 1]
    assert rho.sum() * grid.dx == pytest.approx(1.0, rel=1e-10)


def test_abort_keeps_last_snapshot():
    k = KernelSpec.maxwell(0.0)
    cfg = inhomogeneous_config(kernel=k, kn=1e-3, t_end=0.01)
    bad = initial_grid(cfg)
    bad.cells[3, 0] = -1.0
    with pytest.raises(SimulationAbort) as info:
        run_inhomogeneous(cfg, tensor_for(2, k), grid=bad)
    assert info.value.last_good is not None


def test_initial_grid_shapes():
    cfg = inhomogeneous_config(nx=4, ny=5, init_kind="sine_xy", amplitude=0.25)
    g = initial_grid(cfg)
    assert g.shape == (4, 5) and g.dims == 2
    assert g.cells[..., 0].mean() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        initial_grid(inhomogeneous_config(init_kind="gauss"))


def test_maxwell_closure_low_vs_high_order():
    k = KernelSpec.maxwell(0.5, MAXWELL_C)
    runs = []
    for m in (2, 6):
        cfg = ModelConfig(k, m, m, t_end=2.0, dt=0.01, sample_dt=0.1, problem="haff")
        runs.append(run_haff(cfg, tensor_for(m, k)).theta)
    assert np.max(np.abs(runs[0] - runs[1])) <= 1e-10


def test_elastic_uniform_maxwellian_has_zero_rates():
    from inelastic_hermite.solver import collision_rates

    k = KernelSpec.hard_sphere(1.0)
    t = tensor_for(4, k)
    p = CollisionModelParams(4, 8, 2.0, 0.0)
    cells = np.tile(SpectralState.maxwellian(8, rho=1.2).coeffs, (3, 1))
    rate, _ = collision_rates(cells, ExpansionCenter(), t, p, 1.0)
    assert np.max(np.abs(rate)) < 1e-12


def test_halving_dt_halves_heating_error():
    k = KernelSpec.maxwell(0.5, MAXWELL_C)
    errs = []
    for dt in (4e-3, 2e-3):
        cfg = heating_config(0.5, dt=dt)
        s = run_heating(cfg, tensor_for(2, k))
        errs.append(abs(s.theta[-1] - heating_exact(1.0, 0.01, 0.5, 5.0)))
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.05)
