"""Quick built-in invariant checks used by ``inelastic-hermite validate``."""
from __future__ import annotations

import numpy as np

from .basis import ExpansionCenter, SpectralState, index_set, n_basis, project, rank
from .coefficients import KernelSpec, assemble_tensor
from .collision import CollisionModelParams, esbgk_spectrum, linear_spectrum
from .config import PhysicalScales, compute_knudsen
from .macro import local_center_of, macro_from_state
from .quadrature import oracle_block
from .solver import collision_substep
from .transport import BoundarySpec, GridField, cfl_dt, convection_step


def _cooling():
    worst = 0.0
    for e in (0.0, 0.2, 0.5, 0.8, 1.0):
        t = assemble_tensor(2, KernelSpec.maxwell(e))
        s = sum(t.get(rank(a), 0, 0) for a in ((2, 0, 0), (0, 2, 0), (0, 0, 2)))
        worst = max(worst, abs(s + 3 * (1 - e * e) / 8))
    return worst <= 1e-10, f"max deviation {worst:.2e}"


def _sparsity():
    bad = 0
    for e in (0.3, 1.0):
        t = assemble_tensor(4, KernelSpec.maxwell(e))
        deg = index_set(4).degree
        a, l, k = deg[t.alpha], deg[t.lam], deg[t.kappa]
        bad += int(np.sum(a < l + k)) + int(np.sum(a <= 1))
    return bad == 0, f"{bad} forbidden entries"


def _oracle():
    k = KernelSpec.hard_sphere(0.5)
    al = index_set(2).alphas
    o = oracle_block(al, al, al, k, resolution=4)
    a = assemble_tensor(2, k, symmetric=False).dense()
    err = float(np.max(np.abs(o - a) / np.maximum(1.0, np.abs(o))))
    return err <= 1e-6, f"max scaled difference {err:.2e}"


def _projection(rng):
    c = rng.normal(size=n_basis(5)) * 0.1
    c[0] = 1.0
    s = SpectralState(c, ExpansionCenter((0.1, -0.2, 0.3), 1.2))
    back = project(project(s, ExpansionCenter((-0.3, 0.1, 0.0), 0.8)), s.center)
    err = float(np.max(np.abs(back.coeffs - c)))
    return err <= 1e-12, f"round-trip error {err:.2e}"


def _collision_conservation(rng):
    k = KernelSpec.hard_sphere(0.7)
    t = assemble_tensor(4, k)
    c = rng.normal(size=n_basis(6)) * 0.02
    c[0] = 1.0
    s = SpectralState(c, ExpansionCenter((0.1, 0.0, 0.0), 1.1))
    p = CollisionModelParams(4, 6, 2.0, 0.1)
    a = macro_from_state(s)
    b = macro_from_state(collision_substep(s, t, p, 0.01, 1.0))
    err = max(abs(a.rho - b.rho), float(np.max(np.abs(a.u - b.u))))
    return err <= 1e-12, f"max change of rho, u {err:.2e}"


def _transport(rng):
    cells = rng.normal(size=(16, n_basis(4))) * 0.1
    cells[:, 0] += 1.0
    g = GridField.from_cells(cells, 1.0 / 16)
    g2 = convection_step(g, cfl_dt(g, g.center, 4, 0.3), BoundarySpec())
    err = float(np.max(np.abs(g2.cells.sum(0) - cells.sum(0)))) / float(np.abs(cells).sum())
    return err <= 1e-12, f"relative drift {err:.2e}"


def _linear(rng):
    c = rng.normal(size=n_basis(5)) * 0.05
    c[0] = 1.3
    s = SpectralState(c)
    s = project(s, local_center_of(s))
    p = CollisionModelParams(1, 5, 1.5, 0.2)
    q = linear_spectrum(s, p)
    cool = q[[rank((2, 0, 0)), rank((0, 2, 0)), rank((0, 0, 2))]].sum()
    err = max(float(np.max(np.abs(q[:4]))), abs(cool + 3 * 0.2 * c[0] ** 2))
    st = rng.normal(size=(3, 3))
    st = st + st.T
    st -= np.trace(st) / 3 * np.eye(3)
    piv = float(np.max(np.abs(esbgk_spectrum(1.1, st, 2 / 3, 6) - esbgk_spectrum(1.1, st, 2 / 3, 6, "last"))))
    return max(err, piv) <= 1e-12, f"identity error {err:.2e}, pivot difference {piv:.2e}"


def _knudsen():
    errs = [abs(compute_knudsen(PhysicalScales.argon(r)) / kn - 1) for r, kn in ((1.132e-4, 1.0), (5.662e-4, 0.2))]
    return max(errs) <= 5e-3, f"relative error {max(errs):.2e}"


def run_checks():
    """Yield (name, passed, detail) for each built-in check."""
    rng = np.random.default_rng(12345)
    checks = [
        ("cooling-rate identity", _cooling),
        ("maxwell sparsity and conservation zeros", _sparsity),
        ("closed form vs quadrature", _oracle),
        ("projection round trip", lambda: _projection(rng)),
        ("collision conserves mass and momentum", lambda: _collision_conservation(rng)),
        ("periodic transport conservativity", lambda: _transport(rng)),
        ("linear model identities", lambda: _linear(rng)),
        ("knudsen bookkeeping", _knudsen),
    ]
    for name, fn in checks:
        try:
            ok, detail = fn()
        except Exception as exc:  # report, do not abort the suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        yield name, bool(ok), detail

