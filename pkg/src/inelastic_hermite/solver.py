"""Time integration: collision substep, splitting loop and homogeneous drivers."""
from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .basis import ExpansionCenter, SpectralState, index_set, n_basis, order_of_size, project_coeffs
from .coefficients import CollisionTensor, KernelSpec
from .collision import CollisionModelParams, estimate_nu1, new_model_batch, nu2_default, nu2_matched
from .macro import NonPositiveStateError, macro_fields, macro_from_state
from .transport import BoundarySpec, GridField, convection_step, cfl_dt

log = logging.getLogger(__name__)

COLLISION_STABILITY = 0.9


class StabilityError(RuntimeError):
    pass


class SimulationAbort(RuntimeError):
    """Non-finite or non-physical state; ``last_good`` holds the last valid snapshot."""

    def __init__(self, msg, last_good=None):
        super().__init__(msg)
        self.last_good = last_good


class FitQualityWarning(UserWarning):
    pass


@dataclass
class ModelConfig:
    """Dimensionless run configuration."""

    kernel: KernelSpec
    m0: int
    m: int
    kn: float = 1.0
    problem: str = "haff"  # heating | haff | homogeneous | inhomogeneous
    t_end: float = 1.0
    dt: float = 0.01  # homogeneous drivers
    sample_dt: float | None = None  # homogeneous sampling interval, default dt
    cfl: float = 0.3
    output_times: list = field(default_factory=list)
    nu1: float | None = None  # override of the estimated relaxation rate
    nu2: float | None = None  # override of the drift rate
    nu2_policy: str = "formula"  # formula | matched
    prandtl: float = 2.0 / 3.0
    epsilon: float = 0.0  # heating strength
    strang: bool = False
    # initial state
    rho0: float = 1.0
    u_init: tuple = (0.0, 0.0, 0.0)
    theta0: float = 1.0
    init_kind: str = "uniform"  # uniform | sine_x | sine_xy
    amplitude: float = 0.0
    # grid
    nx: int = 1
    ny: int = 0
    lx: float = 1.0
    ly: float = 1.0
    boundary: BoundarySpec = field(default_factory=BoundarySpec)
    center: ExpansionCenter = field(default_factory=ExpansionCenter)
    workers: int = 1

    def __post_init__(self):
        if not 0 <= self.m0 <= self.m:
            raise ValueError(f"need 0 <= m0 <= m, got [{self.m0}, {self.m}]")
        if not self.kn > 0:
            raise ValueError("Knudsen number must be positive")
        if self.nu2_policy not in ("formula", "matched"):
            raise ValueError(f"unknown nu2 policy {self.nu2_policy!r}")

    @property
    def dims(self) -> int:
        return 0 if self.problem != "inhomogeneous" else (2 if self.ny > 0 else 1)


def model_params(config: ModelConfig, tensor: CollisionTensor) -> CollisionModelParams:
    """Rates at unit temperature. Both rates are later scaled by theta**(1 - varpi)."""
    base = tensor
    if tensor.t_scale != 1.0:
        base = tensor.scaled(tensor.t_scale ** (tensor.kernel.varpi - 1.0), t_scale=1.0)
    if config.m0 >= 2:
        nu1 = estimate_nu1(base, config.m0, config.nu1)
    else:
        nu1 = config.nu1 if config.nu1 is not None else 1.0
    if config.nu2 is not None:
        nu2 = config.nu2
    elif config.nu2_policy == "matched":
        nu2 = nu2_matched(base)
    else:
        # the formula is the hard-sphere cooling rate at C = 1/(4 pi): carry the kernel constant
        nu2 = nu2_default(config.kernel.e) * 4.0 * math.pi * config.kernel.c_const
    return CollisionModelParams(config.m0, config.m, nu1, nu2, config.prandtl)


# ---------------------------------------------------------------------------
# collision


def collision_rates(coeffs, center: ExpansionCenter, tensor: CollisionTensor, params: CollisionModelParams, kn: float,
                    workers: int = 1):
    """d f / d t from collisions for coefficient rows about ``center``.

    Rows are moved to their local centers, the hybrid spectrum is evaluated
    there with the tensor rescaled to the local temperature, and the result is
    moved back. Returns (rates, theta).
    """
    f = np.atleast_2d(np.asarray(coeffs, dtype=float))
    try:
        _, u, theta, _, _ = macro_fields(f, center.u_bar, center.t_bar)
    except NonPositiveStateError as exc:
        raise StabilityError(str(exc)) from exc
    ub = np.asarray(center.u_bar)
    loc = project_coeffs(f, ub, center.t_bar, u, theta)
    factor = (theta / tensor.t_scale) ** (1.0 - tensor.kernel.varpi)

    def work(sl):
        return new_model_batch(loc[sl], theta[sl], tensor, params) * factor[sl, None]

    if workers > 1 and f.shape[0] > 1:
        bounds = np.linspace(0, f.shape[0], workers + 1).astype(int)
        slices = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            q = np.concatenate(list(pool.map(work, slices)))
    else:
        q = work(slice(None))
    # the projection is linear, so the increment can be moved back on its own
    return project_coeffs(q, u, theta, ub, center.t_bar) / kn, theta


def collision_substep(cell: SpectralState, tensor: CollisionTensor, params: CollisionModelParams, dt: float,
                      kn: float) -> SpectralState:
    """Forward-Euler collision update of one cell, returned about the cell's original center."""
    rate, _ = collision_rates(cell.coeffs, cell.center, tensor, params, kn)
    out = SpectralState(cell.coeffs + dt * rate[0], cell.center)
    _check_state(out.coeffs[None, :], cell.center)
    return out


def _check_state(f, center):
    if not np.all(np.isfinite(f)):
        raise StabilityError("non-finite coefficients")
    try:
        macro_fields(f, center.u_bar, center.t_bar)
    except NonPositiveStateError as exc:
        raise StabilityError(f"collision update produced a non-physical state: {exc}") from exc


def collision_dt_cap(coeffs, center, tensor, params, kn) -> float:
    """Largest dt with dt * nu1 * f0 * theta**(1-varpi) / Kn <= 0.9 in every cell."""
    f = np.atleast_2d(coeffs)
    _, _, theta, _, _ = macro_fields(f, center.u_bar, center.t_bar)
    rate = params.nu1 * np.max(f[:, 0] * theta ** (1.0 - tensor.kernel.varpi)) / kn
    return COLLISION_STABILITY / rate if rate > 0 else math.inf


# ---------------------------------------------------------------------------
# homogeneous drivers


@dataclass
class TimeSeries:
    t: np.ndarray
    states: list  # MacroState per sample
    coeffs: np.ndarray  # (n_samples, N)

    @property
    def theta(self) -> np.ndarray:
        return np.array([s.theta for s in self.states])


def heating_rate(coeffs: np.ndarray, center: ExpansionCenter, epsilon: float) -> np.ndarray:
    """epsilon * Laplacian in velocity: epsilon / T sum_d f_{alpha - 2 e_d}."""
    ids = index_set(order_of_size(coeffs.shape[-1]))
    pad = np.concatenate([coeffs, np.zeros(coeffs.shape[:-1] + (1,))], axis=-1)
    out = np.zeros_like(coeffs)
    for d in range(3):
        out += pad[..., ids.down2[d]]
    return epsilon / center.t_bar * out


def run_homogeneous(config: ModelConfig, tensor: CollisionTensor, epsilon: float = 0.0) -> TimeSeries:
    """Forward-Euler integration of the space-homogeneous moment system.

    Collisions are evaluated at the local center; the optional heating term
    acts about the fixed expansion center of the state. Samples are taken at
    multiples of ``config.sample_dt`` (default: every step).
    """
    params = model_params(config, tensor)
    center = config.center
    f = np.zeros(n_basis(config.m))
    f[0] = config.rho0
    f = project_coeffs(f, np.asarray(config.u_init), config.theta0, np.asarray(center.u_bar), center.t_bar)
    sample_every = config.sample_dt or config.dt
    n_samples = int(round(config.t_end / sample_every))
    times = [0.0]
    rows = [f.copy()]
    t = 0.0
    for k in range(1, n_samples + 1):
        target = k * sample_every
        while t < target - 1e-12 * max(1.0, target):
            rate, _ = collision_rates(f, center, tensor, params, config.kn)
            cap = collision_dt_cap(f, center, tensor, params, config.kn)
            dt = min(config.dt, cap, target - t)
            f = f + dt * (rate[0] + heating_rate(f, center, epsilon))
            t += dt
            _check_state(f[None, :], center)
        times.append(target)
        rows.append(f.copy())
    coeffs = np.array(rows)
    states = [macro_from_state(SpectralState(c, center)) for c in coeffs]
    return TimeSeries(np.array(times), states, coeffs)


def run_heating(config: ModelConfig, tensor: CollisionTensor, epsilon: float | None = None) -> TimeSeries:
    eps = config.epsilon if epsilon is None else epsilon
    if eps < 0:
        raise ValueError("heating strength must be non-negative")
    return run_homogeneous(config, tensor, eps)


def run_haff(config: ModelConfig, tensor: CollisionTensor) -> TimeSeries:
    return run_homogeneous(config, tensor, 0.0)


def heating_exact(theta0: float, epsilon: float, e: float, t):
    """Temperature under heating and Maxwell-kernel cooling (effective C/Kn = 1/(4 pi))."""
    if e >= 1.0:
        raise ValueError("heating solution needs e < 1")
    loss = 1.0 - e * e
    th_inf = 8.0 * epsilon / loss
    return (theta0 - th_inf) * np.exp(-loss * np.asarray(t, dtype=float) / 4.0) + th_inf


def haff_curve(t, theta0: float, gamma0: float):
    return theta0 / (1.0 + gamma0 * np.asarray(t, dtype=float)) ** 2


def haff_fit(t, theta) -> float:
    """Least-squares gamma0 for theta(0) / (1 + gamma0 t)^2 on [0, 10]."""
    t = np.asarray(t, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if t.size < 10:
        raise ValueError("need at least 10 samples")
    if np.any(theta <= 0):
        raise ValueError("temperatures must be positive")
    if np.any(np.diff(theta) > 1e-12 * theta[0]):
        warnings.warn("temperature series is not monotone decreasing", FitQualityWarning, stacklevel=2)

    def resid(g):
        return float(np.sum((theta - haff_curve(t, theta[0], g)) ** 2))

    res = minimize_scalar(resid, bounds=(0.0, 10.0), method="bounded", options={"xatol": 1e-12})
    g = float(res.x)
    # the bounded search never lands exactly on the end point
    return 0.0 if resid(0.0) <= resid(g) else g


def haff_r2(t, theta, gamma0: float) -> float:
    theta = np.asarray(theta, dtype=float)
    ss_res = np.sum((theta - haff_curve(t, theta[0], gamma0)) ** 2)
    ss_tot = np.sum((theta - theta.mean()) ** 2)
    return 1.0 if ss_tot == 0 else float(1.0 - ss_res / ss_tot)


# ---------------------------------------------------------------------------
# spatially inhomogeneous runs


def initial_grid(config: ModelConfig) -> GridField:
    nx, ny = config.nx, config.ny
    dx = config.lx / nx
    xc = (np.arange(nx) + 0.5) * dx
    if ny > 0:
        dy = config.ly / ny
        yc = (np.arange(ny) + 0.5) * dy
        X, Y = np.meshgrid(xc, yc, indexing="ij")
    else:
        dy = None
        X, Y = xc, np.zeros_like(xc)
    rho = np.full(X.shape, config.rho0)
    if config.init_kind == "sine_x":
        rho = rho * (1.0 + config.amplitude * np.sin(2 * math.pi * X / config.lx))
    elif config.init_kind == "sine_xy":
        rho = rho * (1.0 + config.amplitude * np.sin(2 * math.pi * X / config.lx) * np.sin(2 * math.pi * Y / config.ly))
    elif config.init_kind != "uniform":
        raise ValueError(f"unknown initial condition {config.init_kind!r}")
    src = np.zeros(X.shape + (n_basis(config.m),))
    src[..., 0] = rho
    c = config.center
    cells = project_coeffs(src, np.asarray(config.u_init), config.theta0, np.asarray(c.u_bar), c.t_bar)
    return GridField.from_cells(cells, dx, dy, c)


def cell_centers(grid: GridField, config: ModelConfig):
    xc = (np.arange(grid.shape[0]) + 0.5) * grid.dx
    if grid.dims == 1:
        return (xc,)
    yc = (np.arange(grid.shape[1]) + 0.5) * grid.dy
    return tuple(np.meshgrid(xc, yc, indexing="ij"))


def _collide_grid(grid: GridField, dt, tensor, params, kn, workers):
    cells = grid.cells
    flat = cells.reshape(-1, cells.shape[-1])
    rate, _ = collision_rates(flat, grid.center, tensor, params, kn, workers)
    new = flat + dt * rate
    _check_state(new, grid.center)
    cells[...] = new.reshape(cells.shape)


def run_inhomogeneous(config: ModelConfig, tensor: CollisionTensor, callback=None, grid: GridField | None = None):
    """Splitting loop: convection about the fixed center, then per-cell collisions.

    Returns a list of (t, GridField) snapshots at ``config.output_times`` (plus
    t=0). ``callback(t, grid)`` is called for each snapshot.
    """
    params = model_params(config, tensor)
    grid = initial_grid(config) if grid is None else grid
    m = config.m
    times = sorted(set(float(x) for x in config.output_times if 0 < x <= config.t_end) | {config.t_end})
    snaps = []

    def emit(t, g):
        snap = (t, g.copy())
        snaps.append(snap)
        if callback is not None:
            callback(t, snap[1])

    emit(0.0, grid)
    t = 0.0
    step = 0
    for target in times:
        while t < target - 1e-12 * max(1.0, target):
            flat = grid.cells.reshape(-1, grid.cells.shape[-1])
            try:
                dt = min(
                    cfl_dt(grid, grid.center, m, config.cfl),
                    collision_dt_cap(flat, grid.center, tensor, params, config.kn),
                    target - t,
                )
                if config.strang:
                    _collide_grid(grid, 0.5 * dt, tensor, params, config.kn, config.workers)
                    grid = convection_step(grid, dt, config.boundary)
                    _collide_grid(grid, 0.5 * dt, tensor, params, config.kn, config.workers)
                else:
                    grid = convection_step(grid, dt, config.boundary)
                    _collide_grid(grid, dt, tensor, params, config.kn, config.workers)
            except (StabilityError, NonPositiveStateError) as exc:
                raise SimulationAbort(f"step {step}, t={t:.6g}: {exc}", snaps[-1]) from exc
            if not np.all(np.isfinite(grid.cells)):
                raise SimulationAbort(f"non-finite values at step {step}, t={t:.6g}", snaps[-1])
            t += dt
            step += 1
        log.info("t=%.6g after %d steps", t, step)
        emit(target, grid)
    return snaps


def grid_macro(grid: GridField):
    """(rho, u, theta, sigma, q) arrays over the interior cells."""
    return macro_fields(grid.cells, grid.center.u_bar, grid.center.t_bar)
