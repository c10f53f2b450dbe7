"""Run configuration: ``key = value`` files, physical scales and nondimensionalization.

Format::

    # comment
    problem = inhomogeneous
    kernel.varpi = 0.5
    bc.x_lo = wall
    bc.x_lo.u = 0, -50, 0

Vectors are comma separated. With ``units = physical`` lengths are in m,
velocities in m/s, temperatures in K and densities in kg/m^3; times are always
dimensionless (unit x0/u0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .basis import ExpansionCenter
from .coefficients import KernelSpec
from .solver import ModelConfig
from .transport import PERIODIC, BoundarySpec, WallSpec

K_BOLTZMANN = 1.380649e-23  # J/K


class ConfigError(ValueError):
    def __init__(self, key: str, msg: str):
        super().__init__(f"{key}: {msg}")
        self.key = key


@dataclass(frozen=True)
class PhysicalScales:
    x0: float  # m
    m0: float  # kg, molecular mass
    theta0: float  # K
    rho0: float  # kg/m^3
    d_ref: float  # m, hard-sphere diameter

    def __post_init__(self):
        for name in ("x0", "m0", "theta0", "rho0", "d_ref"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"scales.{name}", "must be positive")

    @property
    def u0(self) -> float:
        return math.sqrt(K_BOLTZMANN * self.theta0 / self.m0)

    @property
    def b0(self) -> float:
        return math.sqrt(2.0) * self.u0 * math.pi * self.d_ref**2

    @property
    def t0(self) -> float:
        return self.x0 / self.u0

    @classmethod
    def argon(cls, rho0: float = 1.132e-4) -> "PhysicalScales":
        return cls(x0=1e-3, m0=6.63e-26, theta0=273.0, rho0=rho0, d_ref=3.63e-10)


def compute_knudsen(scales: PhysicalScales) -> float:
    return scales.m0 / (math.sqrt(2.0) * math.pi * scales.rho0 * scales.d_ref**2 * scales.x0)


# ---------------------------------------------------------------------------
# parsing


def parse_config_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}", "empty key")
        if key in out:
            raise ConfigError(key, f"duplicate key on line {lineno}")
        out[key] = value
    return out


def load_config_file(path) -> dict[str, str]:
    return parse_config_text(Path(path).read_text())


KNOWN_KEYS = {
    "problem", "units",
    "kernel.varpi", "kernel.e", "kernel.c_const",
    "model.m0", "model.m", "model.kn", "model.nu1", "model.nu2", "model.nu2_policy", "model.prandtl",
    "time.dt", "time.t_end", "time.cfl", "time.sample_dt", "time.outputs", "time.strang",
    "heating.epsilon",
    "init.rho", "init.u", "init.theta", "init.kind", "init.amplitude",
    "grid.nx", "grid.ny", "grid.lx", "grid.ly",
    "center.u", "center.theta",
    "scales.x0", "scales.m0", "scales.theta0", "scales.rho0", "scales.d_ref",
    "output.dimensional",
    "run.workers",
}
_SIDES = ("x_lo", "x_hi", "y_lo", "y_hi")
KNOWN_KEYS |= {f"bc.{s}" for s in _SIDES} | {f"bc.{s}.{k}" for s in _SIDES for k in ("u", "theta")}
PROBLEMS = ("heating", "haff", "homogeneous", "inhomogeneous")


class _Reader:
    def __init__(self, raw: dict[str, str]):
        unknown = sorted(set(raw) - KNOWN_KEYS)
        if unknown:
            raise ConfigError(unknown[0], "unknown key")
        self.raw = raw

    def has(self, key):
        return key in self.raw

    def get(self, key, conv, default=None, required=False):
        if key not in self.raw:
            if required:
                raise ConfigError(key, "missing")
            return default
        try:
            return conv(self.raw[key])
        except (TypeError, ValueError) as exc:
            raise ConfigError(key, f"cannot parse {self.raw[key]!r} ({exc})") from None

    def num(self, key, default=None, required=False):
        return self.get(key, float, default, required)

    def int(self, key, default=None, required=False):
        return self.get(key, int, default, required)

    def vec(self, key, default=None, n=3):
        def conv(s):
            v = tuple(float(x) for x in s.split(","))
            if len(v) != n:
                raise ValueError(f"expected {n} components")
            return v

        return self.get(key, conv, default)

    def flag(self, key, default=False):
        def conv(s):
            s = s.lower()
            if s in ("1", "true", "yes", "on"):
                return True
            if s in ("0", "false", "no", "off"):
                return False
            raise ValueError("expected a boolean")

        return self.get(key, conv, default)


def read_scales(rd: _Reader) -> PhysicalScales | None:
    keys = ("x0", "m0", "theta0", "rho0", "d_ref")
    present = [k for k in keys if rd.has(f"scales.{k}")]
    if not present:
        return None
    missing = [k for k in keys if k not in present]
    if missing:
        raise ConfigError(f"scales.{missing[0]}", "missing scale")
    return PhysicalScales(*(rd.num(f"scales.{k}") for k in keys))


def nondimensionalize(raw: dict[str, str], scales: PhysicalScales | None = None) -> ModelConfig:
    """Build a dimensionless ModelConfig from parsed ``key = value`` pairs."""
    rd = _Reader(raw)
    problem = rd.get("problem", str, "haff")
    if problem not in PROBLEMS:
        raise ConfigError("problem", f"expected one of {PROBLEMS}")
    units = rd.get("units", str, "dimensionless")
    if units not in ("dimensionless", "physical"):
        raise ConfigError("units", "expected 'dimensionless' or 'physical'")
    scales = scales or read_scales(rd)
    physical = units == "physical"
    if physical and scales is None:
        raise ConfigError("scales.x0", "physical units need scales.x0, m0, theta0, rho0, d_ref")

    lscale = scales.x0 if physical else 1.0
    vscale = scales.u0 if physical else 1.0
    tscale = scales.theta0 if physical else 1.0
    rscale = scales.rho0 if physical else 1.0

    varpi = rd.num("kernel.varpi", 0.5)
    e = rd.num("kernel.e", required=True)
    if varpi == 1.0:
        c_default = 1.0 / (4.0 * math.pi)
    else:
        c_default = 1.0 / (4.0 * math.sqrt(2.0) * math.pi)
    try:
        kernel = KernelSpec(varpi, rd.num("kernel.c_const", c_default), e)
    except ValueError as exc:
        raise ConfigError("kernel.e", str(exc)) from None

    kn = rd.num("model.kn")
    if kn is None:
        if scales is None:
            raise ConfigError("model.kn", "missing (give it or the physical scales)")
        kn = compute_knudsen(scales)

    def wall(side):
        kind = rd.get(f"bc.{side}", str, PERIODIC)
        if kind == PERIODIC:
            for k in ("u", "theta"):
                if rd.has(f"bc.{side}.{k}"):
                    raise ConfigError(f"bc.{side}.{k}", "only meaningful for a wall")
            return PERIODIC
        if kind != "wall":
            raise ConfigError(f"bc.{side}", "expected 'periodic' or 'wall'")
        u = rd.vec(f"bc.{side}.u", (0.0, 0.0, 0.0))
        th = rd.num(f"bc.{side}.theta", tscale)
        try:
            return WallSpec(tuple(x / vscale for x in u), th / tscale)
        except ValueError as exc:
            raise ConfigError(f"bc.{side}.theta", str(exc)) from None

    sides = [wall(s) for s in _SIDES]
    try:
        boundary = BoundarySpec(*sides)
    except ValueError as exc:
        raise ConfigError("bc.x_lo", str(exc)) from None

    outputs = rd.get("time.outputs", lambda s: [float(x) for x in s.split(",") if x.strip()], [])
    try:
        center = ExpansionCenter(
            tuple(x / vscale for x in rd.vec("center.u", (0.0, 0.0, 0.0))),
            rd.num("center.theta", tscale) / tscale,
        )
    except ValueError as exc:
        raise ConfigError("center.theta", str(exc)) from None

    fields = dict(
        kernel=kernel,
        m0=rd.int("model.m0", required=True),
        m=rd.int("model.m", required=True),
        kn=kn,
        problem=problem,
        t_end=rd.num("time.t_end", 1.0),
        dt=rd.num("time.dt", 0.01),
        sample_dt=rd.num("time.sample_dt"),
        cfl=rd.num("time.cfl", 0.3),
        output_times=outputs,
        nu1=rd.num("model.nu1"),
        nu2=rd.num("model.nu2"),
        nu2_policy=rd.get("model.nu2_policy", str, "formula"),
        prandtl=rd.num("model.prandtl", 2.0 / 3.0),
        epsilon=rd.num("heating.epsilon", 0.0),
        strang=rd.flag("time.strang"),
        rho0=rd.num("init.rho", rscale) / rscale,
        u_init=tuple(x / vscale for x in rd.vec("init.u", (0.0, 0.0, 0.0))),
        theta0=rd.num("init.theta", tscale) / tscale,
        init_kind=rd.get("init.kind", str, "uniform"),
        amplitude=rd.num("init.amplitude", 0.0),
        nx=rd.int("grid.nx", 1),
        ny=rd.int("grid.ny", 0),
        lx=rd.num("grid.lx", lscale) / lscale,
        ly=rd.num("grid.ly", lscale) / lscale,
        boundary=boundary,
        center=center,
        workers=rd.int("run.workers", 1),
    )
    checks = [
        ("time.dt", fields["dt"] > 0, "must be positive"),
        ("time.t_end", fields["t_end"] > 0, "must be positive"),
        ("time.cfl", 0 < fields["cfl"] < 1, "must lie in (0, 1)"),
        ("init.rho", fields["rho0"] > 0, "must be positive"),
        ("init.theta", fields["theta0"] > 0, "must be positive"),
        ("grid.nx", fields["nx"] >= 1, "must be at least 1"),
        ("grid.ny", fields["ny"] >= 0, "must be non-negative"),
        ("init.kind", fields["init_kind"] in ("uniform", "sine_x", "sine_xy"), "unknown initial condition"),
        ("model.nu2_policy", fields["nu2_policy"] in ("formula", "matched"), "expected 'formula' or 'matched'"),
        ("run.workers", fields["workers"] >= 1, "must be at least 1"),
    ]
    for key, ok, msg in checks:
        if not ok:
            raise ConfigError(key, msg)
    try:
        return ModelConfig(**fields)
    except ValueError as exc:
        raise ConfigError("model.m0", str(exc)) from None


def output_scales(raw: dict[str, str]) -> PhysicalScales | None:
    """Scales for re-dimensionalized output, or None for dimensionless output."""
    rd = _Reader(raw)
    if not rd.flag("output.dimensional"):
        return None
    scales = read_scales(rd)
    if scales is None:
        raise ConfigError("output.dimensional", "needs the scales.* keys")
    return scales
