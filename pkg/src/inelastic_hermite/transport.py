"""Finite-volume convection of the coefficient field about a fixed center.

Fluxes come from the Hermite recurrence, face values from a two-stencil WENO
reconstruction, and the numerical flux is HLL with the extreme speeds
u_d -+ C_{M+1} sqrt(T). Two ghost layers per side.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import ndtr

from .basis import ExpansionCenter, index_set, largest_hermite_root, n_basis, order_of_size, project_coeffs
from .macro import macro_fields

GHOST = 2
WENO_EPS = 1e-6
WENO_GAMMA = (1.0 / 3.0, 2.0 / 3.0)


class BoundaryConfigError(ValueError):
    pass


class TimeStepError(ValueError):
    pass


@lru_cache(maxsize=None)
def max_speed_factor(m: int) -> float:
    """C_{M+1}: largest root of He_{M+1}."""
    return largest_hermite_root(m + 1)


# ---------------------------------------------------------------------------
# grid and boundaries


@dataclass
class GridField:
    """Cell coefficients with ghost layers; ``data`` is (nx+4, N) or (nx+4, ny+4, N)."""

    data: np.ndarray
    dx: float
    dy: float | None = None
    center: ExpansionCenter = field(default_factory=ExpansionCenter)

    @classmethod
    def from_cells(cls, cells, dx: float, dy: float | None = None, center: ExpansionCenter | None = None):
        cells = np.asarray(cells, dtype=float)
        if cells.ndim not in (2, 3):
            raise ValueError("cells must be (nx, N) or (nx, ny, N)")
        if cells.ndim == 3 and dy is None:
            raise ValueError("2D grid needs dy")
        pad = [(GHOST, GHOST)] * (cells.ndim - 1) + [(0, 0)]
        return cls(np.pad(cells, pad), dx, dy, center or ExpansionCenter())

    @property
    def dims(self) -> int:
        return self.data.ndim - 1

    @property
    def cells(self) -> np.ndarray:
        if self.dims == 1:
            return self.data[GHOST:-GHOST]
        return self.data[GHOST:-GHOST, GHOST:-GHOST]

    @property
    def m(self) -> int:
        return order_of_size(self.data.shape[-1])

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cells.shape[:-1]

    def spacing(self, axis: int) -> float:
        return self.dx if axis == 0 else self.dy

    def copy(self) -> "GridField":
        return GridField(self.data.copy(), self.dx, self.dy, self.center)


@dataclass(frozen=True)
class WallSpec:
    """Fully diffusive wall."""

    u_wall: tuple[float, float, float] = (0.0, 0.0, 0.0)
    theta_wall: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "u_wall", tuple(float(x) for x in self.u_wall))
        if not self.theta_wall > 0:
            raise BoundaryConfigError("wall temperature must be positive")


PERIODIC = "periodic"


@dataclass(frozen=True)
class BoundarySpec:
    x_lo: object = PERIODIC
    x_hi: object = PERIODIC
    y_lo: object = PERIODIC
    y_hi: object = PERIODIC

    def __post_init__(self):
        for lo, hi in ((self.x_lo, self.x_hi), (self.y_lo, self.y_hi)):
            for side in (lo, hi):
                if side != PERIODIC and not isinstance(side, WallSpec):
                    raise BoundaryConfigError(f"unknown boundary kind {side!r}")
            if (lo == PERIODIC) != (hi == PERIODIC):
                raise BoundaryConfigError("periodic boundary must be paired with a periodic opposite side")

    def sides(self, axis: int):
        return (self.x_lo, self.x_hi) if axis == 0 else (self.y_lo, self.y_hi)


def wall_maxwellian(rho_g, center: ExpansionCenter, wall: WallSpec, n: int) -> np.ndarray:
    """Coefficients of rho_g * omega_{u_w, theta_w} about ``center`` (rho_g may be an array)."""
    rho_g = np.asarray(rho_g, dtype=float)
    src = np.zeros(rho_g.shape + (n,))
    src[..., 0] = rho_g
    return project_coeffs(src, np.asarray(wall.u_wall), wall.theta_wall, np.asarray(center.u_bar), center.t_bar)


def _wall_face_mass_flux(ghost, near, far, center, m, axis, outward):
    """Numerical mass flux through the wall face, positive out of the domain."""
    if outward < 0:  # face between ghost (left) and first interior cell (right)
        left, _ = weno_reconstruct(ghost, ghost, near)
        _, right = weno_reconstruct(ghost, near, far)
        return -hll_flux(left, right, center, m, axis)[..., 0]
    left, _ = weno_reconstruct(far, near, ghost)
    _, right = weno_reconstruct(near, ghost, ghost)
    return hll_flux(left, right, center, m, axis)[..., 0]


def wall_ghost(near: np.ndarray, far: np.ndarray, center: ExpansionCenter, wall: WallSpec, axis: int,
               outward: int, iters: int = 12, tol: float = 1e-14) -> np.ndarray:
    """Ghost coefficients of a diffusive wall.

    ``near``/``far`` are the first and second interior cells from the wall and
    ``outward`` is +1 if the wall lies on the high side of ``axis``. The ghost
    is a wall Maxwellian. Its density starts from the balance of half-space
    influx against the outgoing flux of the interior cell's Maxwellian and is
    then refined by secant steps (at most ``iters``) until the scheme's mass
    flux through the wall face is below ``tol`` times the interior density.
    """
    rho, u, theta, _, _ = macro_fields(near, center.u_bar, center.t_bar)
    n = near.shape[-1]
    m = order_of_size(n)
    st = np.sqrt(theta)
    w = outward * u[..., axis] / st
    flux_out = rho * st * (w * ndtr(w) + np.exp(-0.5 * w * w) / math.sqrt(2.0 * math.pi))
    r0 = flux_out / math.sqrt(wall.theta_wall / (2.0 * math.pi))

    def mass_flux(r):
        return _wall_face_mass_flux(wall_maxwellian(r, center, wall, n), near, far, center, m, axis, outward)

    r1 = 1.01 * r0
    g0, g1 = mass_flux(r0), mass_flux(r1)
    for _ in range(iters):
        if np.all(np.abs(g1) <= tol * np.abs(rho)):
            break
        den = g1 - g0
        safe = np.abs(den) > 1e-300
        r2 = np.where(safe, r1 - g1 * (r1 - r0) / np.where(safe, den, 1.0), r1)
        r0, g0 = r1, g1
        r1, g1 = r2, mass_flux(r2)
    return wall_maxwellian(r1, center, wall, n)


def apply_boundaries(grid: GridField, spec: BoundarySpec) -> GridField:
    """Fill ghost layers in place (and return the grid)."""
    g = GHOST
    d = grid.data
    for axis in range(grid.dims):
        lo, hi = spec.sides(axis)
        a = np.moveaxis(d, axis, 0)  # view
        n = a.shape[0] - 2 * g
        t = (slice(None),) if grid.dims == 1 else (slice(g, -g),)  # interior span of the other axis
        if lo == PERIODIC:
            a[(slice(0, g),) + t] = a[(slice(n, n + g),) + t]
            a[(slice(n + g, None),) + t] = a[(slice(g, 2 * g),) + t]
            continue
        for side, sgn in ((lo, -1), (hi, +1)):
            near = a[(g if sgn < 0 else n + g - 1,) + t]
            far = a[(g + 1 if sgn < 0 else n + g - 2,) + t]
            ghost = wall_ghost(near, far, grid.center, side, axis, sgn)
            a[(slice(0, g) if sgn < 0 else slice(n + g, None),) + t] = ghost
    return grid


# ---------------------------------------------------------------------------
# fluxes


def flux_vector(coeffs, center: ExpansionCenter, d: int) -> np.ndarray:
    """Axis-d flux: (alpha_d+1) sqrt(T) f_{alpha+e_d} + u_d f_alpha + sqrt(T) f_{alpha-e_d}."""
    f = np.asarray(coeffs, dtype=float)
    ids = index_set(order_of_size(f.shape[-1]))
    st = math.sqrt(center.t_bar)
    pad = np.concatenate([f, np.zeros(f.shape[:-1] + (1,))], axis=-1)
    up = (ids.alphas[:, d] + 1) * st * pad[..., ids.up[d]]
    return up + center.u_bar[d] * f + st * pad[..., ids.down[d]]


def flux_matrix(m: int, center: ExpansionCenter, d: int) -> np.ndarray:
    """The constant matrix applied by ``flux_vector``, assembled column by column."""
    return flux_vector(np.eye(n_basis(m)), center, d).T


def weno_reconstruct(fm1, f0, fp1):
    """Face values (f_{j+1/2}^L, f_{j-1/2}^R) from cells j-1, j, j+1 (elementwise)."""
    fm1, f0, fp1 = (np.asarray(x, dtype=float) for x in (fm1, f0, fp1))
    g1, g2 = WENO_GAMMA
    dm2 = (f0 - fm1) ** 2
    dp2 = (fp1 - f0) ** 2
    wl1 = g1 / (WENO_EPS + dm2) ** 2
    wl2 = g2 / (WENO_EPS + dp2) ** 2
    wr1 = g1 / (WENO_EPS + dp2) ** 2
    wr2 = g2 / (WENO_EPS + dm2) ** 2
    left = (wl1 * (1.5 * f0 - 0.5 * fm1) + wl2 * (0.5 * f0 + 0.5 * fp1)) / (wl1 + wl2)
    right = (wr1 * (1.5 * f0 - 0.5 * fp1) + wr2 * (0.5 * f0 + 0.5 * fm1)) / (wr1 + wr2)
    return left, right


def hll_flux(f_left, f_right, center: ExpansionCenter, m: int, d: int) -> np.ndarray:
    cm = max_speed_factor(m) * math.sqrt(center.t_bar)
    lam_l = center.u_bar[d] - cm
    lam_r = center.u_bar[d] + cm
    fl = flux_vector(f_left, center, d)
    if lam_l >= 0:
        return fl
    fr = flux_vector(f_right, center, d)
    if lam_r <= 0:
        return fr
    f_left = np.asarray(f_left, dtype=float)
    f_right = np.asarray(f_right, dtype=float)
    return (lam_r * fl - lam_l * fr + lam_r * lam_l * (f_right - f_left)) / (lam_r - lam_l)


def cfl_dt(grid: GridField, center: ExpansionCenter, m: int, cfl: float) -> float:
    if not 0 < cfl < 1:
        raise TimeStepError("CFL number must lie in (0, 1)")
    cm = max_speed_factor(m) * math.sqrt(center.t_bar)
    return cfl * min(grid.spacing(d) / (abs(center.u_bar[d]) + cm) for d in range(grid.dims))


def _flux_divergence(data: np.ndarray, axis: int, center: ExpansionCenter, m: int, h: float) -> np.ndarray:
    """(F_{j+1/2} - F_{j-1/2}) / h for interior cells along ``axis``, ghost-padded input."""
    a = np.moveaxis(data, axis, 0)
    n = a.shape[0] - 2 * GHOST
    # faces i+1/2 for padded i = 1 .. n+1
    left, _ = weno_reconstruct(a[0 : n + 1], a[1 : n + 2], a[2 : n + 3])
    _, right = weno_reconstruct(a[1 : n + 2], a[2 : n + 3], a[3 : n + 4])
    flux = hll_flux(left, right, center, m, axis)
    div = (flux[1:] - flux[:-1]) / h
    return np.moveaxis(div, 0, axis)


def convection_step(grid: GridField, dt: float, spec: BoundarySpec, cfl_limit: float = 1.0) -> GridField:
    """One forward-Euler update of all cells; x and y fluxes applied together."""
    m = grid.m
    cm = max_speed_factor(m) * math.sqrt(grid.center.t_bar)
    for d in range(grid.dims):
        if dt * (abs(grid.center.u_bar[d]) + cm) / grid.spacing(d) >= cfl_limit:
            raise TimeStepError(f"time step {dt} violates the CFL condition along axis {d}")
    apply_boundaries(grid, spec)
    g = GHOST
    inc = np.zeros(grid.cells.shape)
    for d in range(grid.dims):
        div = _flux_divergence(grid.data, d, grid.center, m, grid.spacing(d))
        if grid.dims == 2:
            div = div[:, g:-g] if d == 0 else div[g:-g, :]
        inc -= div
    out = grid.copy()
    out.cells[...] += dt * inc
    return out
