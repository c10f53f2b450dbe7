"""CSV snapshots of macroscopic fields."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .basis import SpectralState
from .config import PhysicalScales
from .macro import macro_fields
from .transport import GridField

FIELDS = ["rho", "u1", "u2", "u3", "theta", "sigma11", "sigma12", "sigma13", "sigma22", "sigma23", "q1", "q2", "q3"]


def header(dims: int) -> list[str]:
    return ["t"] + ["x", "y"][:dims] + FIELDS


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def snapshot_rows(obj, t: float, scales: PhysicalScales | None = None) -> list[list[float]]:
    """Rows of (t, [x, [y]], macroscopic fields) for a grid or a single state."""
    if isinstance(obj, GridField):
        rho, u, theta, sigma, q = macro_fields(obj.cells, obj.center.u_bar, obj.center.t_bar)
        xs = [(np.arange(obj.shape[0]) + 0.5) * obj.dx]
        if obj.dims == 2:
            yc = (np.arange(obj.shape[1]) + 0.5) * obj.dy
            xs = list(np.meshgrid(xs[0], yc, indexing="ij"))
    elif isinstance(obj, SpectralState):
        rho, u, theta, sigma, q = macro_fields(obj.coeffs[None, :], obj.center.u_bar, obj.center.t_bar)
        xs = []
    else:
        raise TypeError("expected a GridField or a SpectralState")
    rho = np.ravel(rho)
    n = rho.size
    u = np.reshape(u, (n, 3))
    sigma = np.reshape(sigma, (n, 3, 3))
    q = np.reshape(q, (n, 3))
    theta = np.ravel(theta)
    xs = [np.ravel(x) for x in xs]
    if scales is not None:
        u0 = scales.u0
        t = t * scales.t0
        xs = [x * scales.x0 for x in xs]
        rho = rho * scales.rho0
        u = u * u0
        theta = theta * scales.theta0
        sigma = sigma * scales.rho0 * u0**2
        q = q * scales.rho0 * u0**3
    cols = [np.full(n, t)] + xs + [
        rho, u[:, 0], u[:, 1], u[:, 2], theta,
        sigma[:, 0, 0], sigma[:, 0, 1], sigma[:, 0, 2], sigma[:, 1, 1], sigma[:, 1, 2],
        q[:, 0], q[:, 1], q[:, 2],
    ]
    return np.column_stack(cols).tolist()


def emit_snapshot(obj, t: float, path, scales: PhysicalScales | None = None, append: bool = False) -> Path:
    """Write (or append) one snapshot to a CSV file; the header is written once."""
    path = Path(path)
    dims = obj.dims if isinstance(obj, GridField) else 0
    rows = snapshot_rows(obj, t, scales)
    new = not (append and path.exists() and path.stat().st_size > 0)
    with open(path, "w" if new else "a", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(header(dims))
        w.writerows([[_fmt(x) for x in r] for r in rows])
    return path


def read_snapshot_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)
