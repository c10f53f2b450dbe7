"""Command-line interface: precompute, run, inspect, validate."""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from .basis import SpectralState, index_set
from .cache import CacheError, cache_read, cache_write, read_header
from .coefficients import KernelSpec, assemble_tensor
from .config import ConfigError, load_config_file, nondimensionalize, output_scales
from .output import emit_snapshot
from .solver import SimulationAbort, StabilityError, haff_fit, haff_r2, heating_exact, run_haff, run_heating, \
    run_homogeneous, run_inhomogeneous

WORKERS_ENV = "INELASTIC_HERMITE_WORKERS"
log = logging.getLogger("inelastic_hermite")


def _workers(flag: int | None, default: int = 1) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise SystemExit(f"error: {WORKERS_ENV} must be an integer, got {env!r}")
        if n < 1:
            raise SystemExit(f"error: {WORKERS_ENV} must be at least 1")
        return n
    return flag if flag else default


def cmd_precompute(args) -> int:
    kernel = KernelSpec(args.varpi, args.const, args.e)
    t0 = time.perf_counter()
    tensor = assemble_tensor(args.m, kernel, drop_tol=args.drop_tol, symmetric=not args.raw,
                             workers=_workers(args.workers))
    cache_write(tensor, args.out)
    print(f"wrote {args.out}: order {args.m}, {tensor.nnz} nonzeros in {time.perf_counter() - t0:.2f} s")
    return 0


def cmd_inspect(args) -> int:
    hdr = read_header(args.cache)
    tensor = cache_read(args.cache)
    deg = index_set(tensor.m).degree
    a, l, k = deg[tensor.alpha], deg[tensor.lam], deg[tensor.kappa]
    n = tensor.size
    for key in ("m", "varpi", "e", "c_const", "drop_tol", "nnz", "ordering", "symmetric"):
        print(f"{key:10s} {hdr[key]}")
    print(f"{'density':10s} {tensor.nnz / n**3:.4e}  (of {n**3} slots)")
    print(f"{'conserv':10s} {int(np.sum(a <= 1))} entries with |alpha| <= 1")
    print(f"{'deg-gap':10s} {int(np.sum(a < l + k))} entries with |alpha| < |lambda| + |kappa|")
    if tensor.nnz:
        print(f"{'max|A|':10s} {np.max(np.abs(tensor.values)):.6e}")
    return 0


def _load_tensor(cfg, cache, workers: int):
    if cache:
        return cache_read(cache, cfg.kernel, cfg.m0)
    t0 = time.perf_counter()
    tensor = assemble_tensor(cfg.m0, cfg.kernel, workers=workers)
    log.info("assembled tensor (order %d) in %.2f s", cfg.m0, time.perf_counter() - t0)
    return tensor


def cmd_run(args) -> int:
    raw = load_config_file(args.config)
    cfg = nondimensionalize(raw)
    scales = output_scales(raw)
    cfg.workers = _workers(args.workers, cfg.workers)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tensor = _load_tensor(cfg, args.cache, cfg.workers)

    if cfg.problem == "inhomogeneous":
        path = out_dir / "snapshots.csv"
        if path.exists():
            path.unlink()

        def write(t, grid):
            emit_snapshot(grid, t, path, scales, append=True)

        try:
            snaps = run_inhomogeneous(cfg, tensor, callback=write)
        except SimulationAbort as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 3
        print(f"wrote {len(snaps)} snapshots to {path}")
        return 0

    runner = {"heating": run_heating, "haff": run_haff, "homogeneous": run_homogeneous}[cfg.problem]
    try:
        series = runner(cfg, tensor)
    except StabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    path = out_dir / "series.csv"
    if path.exists():
        path.unlink()
    for t, c in zip(series.t, series.coeffs):
        emit_snapshot(SpectralState(c, cfg.center), t, path, scales, append=True)
    print(f"wrote {len(series.t)} rows to {path}")
    th = series.theta
    if cfg.problem == "heating" and cfg.kernel.e < 1:
        exact = heating_exact(cfg.theta0, cfg.epsilon, cfg.kernel.e, series.t)
        print(f"theta(end) = {th[-1]:.8g}, max relative deviation from closed form {np.max(np.abs(th / exact - 1)):.3e}")
    elif cfg.problem == "haff" and len(th) >= 10:
        g = haff_fit(series.t, th)
        print(f"gamma0 = {g:.6g}, R^2 = {haff_r2(series.t, th, g):.6f}")
    return 0


def cmd_validate(args) -> int:
    from .validation import run_checks

    failed = 0
    for name, ok, detail in run_checks():
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        failed += not ok
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="inelastic-hermite", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    pc = sub.add_parser("precompute", help="assemble a collision tensor and write the binary cache")
    pc.add_argument("--m", type=int, required=True)
    pc.add_argument("--varpi", type=float, required=True)
    pc.add_argument("--e", type=float, required=True)
    pc.add_argument("--const", type=float, required=True)
    pc.add_argument("--out", required=True)
    pc.add_argument("--drop-tol", type=float, default=1e-14)
    pc.add_argument("--raw", action="store_true", help="store one-sided rather than symmetrized coefficients")
    pc.add_argument("--workers", type=int)
    pc.set_defaults(fn=cmd_precompute)

    pr = sub.add_parser("run", help="run a configured simulation")
    pr.add_argument("--config", required=True)
    pr.add_argument("--cache")
    pr.add_argument("--out-dir", default=".")
    pr.add_argument("--workers", type=int)
    pr.set_defaults(fn=cmd_run)

    pi = sub.add_parser("inspect", help="print a cache header and sparsity statistics")
    pi.add_argument("--cache", required=True)
    pi.set_defaults(fn=cmd_inspect)

    pv = sub.add_parser("validate", help="run the built-in invariant checks")
    pv.set_defaults(fn=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.fn(args)
    except (ConfigError, CacheError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
