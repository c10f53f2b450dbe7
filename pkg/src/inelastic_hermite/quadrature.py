"""Direct numerical quadrature of the collision integrals.

Used as an independent check on the closed-form sums in ``coefficients``.
Nothing here touches those sums.

Accuracy model: with ``v = h + g/2``, ``v* = h - g/2`` the integrand of
A[alpha, lambda, kappa] is a polynomial of total degree
``d = |alpha| + |lambda| + |kappa|`` in ``(h, g, sigma)`` times
``|g|**mu exp(-|h|^2 - |g|^2/4)``. Gauss-Hermite in h, generalized
Gauss-Laguerre in s = |g|^2/4 (absorbing |g|**mu), and Gauss-Legendre x
uniform-azimuth sphere grids for the directions of g and sigma are all exact
once ``resolution >= d // 2 + 1``.
"""
from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.special import roots_genlaguerre

from .basis import hermite_eval_table
from .coefficients import KernelSpec


class OracleAccuracyWarning(UserWarning):
    pass


def sphere_grid(n_theta: int = 32, n_phi: int | None = None):
    """Gauss-Legendre in cos(theta) times uniform azimuth. Returns (points (n,3), weights)."""
    n_phi = 2 * n_theta if n_phi is None else n_phi
    x, wx = np.polynomial.legendre.leggauss(n_theta)
    phi = (np.arange(n_phi) + 0.5) * (2.0 * math.pi / n_phi)
    st = np.sqrt(1.0 - x * x)
    pts = np.stack(
        [
            (st[:, None] * np.cos(phi)[None, :]).ravel(),
            (st[:, None] * np.sin(phi)[None, :]).ravel(),
            np.repeat(x, n_phi),
        ],
        axis=1,
    )
    w = np.repeat(wx, n_phi) * (2.0 * math.pi / n_phi)
    return pts, w


def radial_rule(n: int, power: float, scale: float):
    """Nodes r and weights for integral_0^inf r**power exp(-r^2 / scale) F(r) dr."""
    # s = r^2/scale: r^power dr = scale^{(power+1)/2} / 2 * s^{(power-1)/2} ds
    s, w = roots_genlaguerre(n, (power - 1.0) / 2.0)
    return np.sqrt(scale * s), w * 0.5 * scale ** ((power + 1.0) / 2.0)


def _hermite_products(points: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    """H_alpha(points) for each alpha row; shape (*points.shape[:-1], len(alphas))."""
    nmax = int(alphas.max()) if alphas.size else 0
    tabs = [hermite_eval_table(nmax, points[..., d]) for d in range(3)]
    out = tabs[0][alphas[:, 0]] * tabs[1][alphas[:, 1]] * tabs[2][alphas[:, 2]]
    return np.moveaxis(out, 0, -1)


# ---------------------------------------------------------------------------
# small oracles for the building blocks


def sphere_moment_quad(kappa, n_theta: int = 32) -> float:
    pts, w = sphere_grid(n_theta)
    return float(np.sum(w * np.prod(pts ** np.asarray(kappa), axis=1)))


def gaussian_moment_quad(kappa, alpha, mu: float, n_r: int = 40, n_theta: int = 24) -> float:
    r, wr = radial_rule(n_r, 2.0 + mu, 2.0)
    chi, wc = sphere_grid(n_theta)
    v = r[:, None, None] * chi[None, :, :]
    integrand = np.prod(v ** np.asarray(kappa), axis=-1) * _hermite_products(v, np.array([alpha]))[..., 0]
    return float(np.einsum("i,j,ij->", wr, wc, integrand) * (2.0 * math.pi) ** -1.5)


def _relative_integral(fun, mu: float, n_r: int, n_theta: int, scale: float = 2.0) -> float:
    """Integral over g in R^3 and sigma in S^2 of fun(g, gp_unit_terms) |g|^mu exp(-|g|^2/scale)."""
    r, wr = radial_rule(n_r, 2.0 + mu, scale)
    chi, wc = sphere_grid(n_theta)
    sig, ws = sphere_grid(n_theta)
    g = r[:, None, None, None] * chi[None, :, None, :] * np.ones((1, 1, sig.shape[0], 1))
    vals = fun(g, r[:, None, None, None] * sig[None, None, :, :])
    return float(np.einsum("i,j,k,ijk->", wr, wc, ws, vals))


def coeff_D_quad(alpha, beta, mu: float, e: float, n_r: int = 30, n_theta: int = 16) -> float:
    a, b = (1.0 - e) / 2.0, (1.0 + e) / 2.0

    def fun(g, r_sigma):
        gp = a * g + b * r_sigma
        return _hermite_products(gp, np.array([alpha]))[..., 0] * _hermite_products(g, np.array([beta]))[..., 0]

    return _relative_integral(fun, mu, n_r, n_theta) * (2.0 * math.pi) ** -1.5


def coeff_psi_quad(alpha, beta, mu: float, n_r: int = 30, n_theta: int = 16) -> float:
    def fun(g, r_sigma):
        return _hermite_products(g, np.array([alpha, beta])).prod(axis=-1)

    return _relative_integral(fun, mu, n_r, n_theta) * (2.0 * math.pi) ** -1.5


def gamma_quad(kappa, j, kernel: KernelSpec, n_r: int = 30, n_theta: int = 16) -> float:
    """Direct quadrature of gamma_kappa^j (relative velocity g, scattering direction sigma)."""
    a, b = (1.0 - kernel.e) / 2.0, (1.0 + kernel.e) / 2.0
    rt2 = math.sqrt(2.0)

    def fun(g, r_sigma):
        gp = a * g + b * r_sigma
        hj = _hermite_products(np.stack([gp, g]) / rt2, np.array([j]))[..., 0]
        return (hj[0] - hj[1]) * _hermite_products(g / rt2, np.array([kappa]))[..., 0]

    # omega(g / sqrt2) = (2 pi)^{-3/2} exp(-|g|^2 / 4)
    return kernel.c_const * _relative_integral(fun, kernel.mu, n_r, n_theta, scale=4.0) * (2.0 * math.pi) ** -1.5


# ---------------------------------------------------------------------------
# the collision-tensor oracle


def required_resolution(total_degree: int) -> int:
    return total_degree // 2 + 1


def oracle_block(
    alphas,
    lams,
    kappas,
    kernel: KernelSpec,
    resolution: int | None = None,
    symmetric: bool = False,
    sigma_theta: int | None = None,
    chunk: int = 4096,
) -> np.ndarray:
    """A[alpha, lambda, kappa] for every combination of the given index lists.

    Returns an array of shape (len(alphas), len(lams), len(kappas)).
    ``symmetric=True`` integrates the symmetrized weak form (both particles).
    ``sigma_theta`` overrides the sigma grid (defaults to ``resolution``).
    """
    alphas = np.atleast_2d(np.asarray(alphas, dtype=np.int64))
    lams = np.atleast_2d(np.asarray(lams, dtype=np.int64))
    kappas = np.atleast_2d(np.asarray(kappas, dtype=np.int64))
    degree = int(alphas.sum(1).max() + lams.sum(1).max() + kappas.sum(1).max())
    need = required_resolution(degree)
    if resolution is None:
        resolution = need
    elif resolution < need:
        warnings.warn(
            f"oracle resolution {resolution} is below {need} needed for total degree {degree}; "
            "result is not exact",
            OracleAccuracyWarning,
            stacklevel=2,
        )
    n = resolution
    ea, eb = (1.0 - kernel.e) / 2.0, (1.0 + kernel.e) / 2.0

    xh, wh = np.polynomial.hermite.hermgauss(n)  # weight exp(-x^2)
    hh = np.stack(np.meshgrid(xh, xh, xh, indexing="ij"), axis=-1).reshape(-1, 3)
    whh = np.einsum("i,j,k->ijk", wh, wh, wh).ravel()
    r, wr = radial_rule(n, 2.0 + kernel.mu, 4.0)
    chi, wc = sphere_grid(n)
    gg = (r[:, None, None] * chi[None, :, :]).reshape(-1, 3)
    wg = np.outer(wr, wc).ravel()
    rg = np.repeat(r, chi.shape[0])
    sig, ws = sphere_grid(sigma_theta or n)

    h_all = np.repeat(hh, gg.shape[0], axis=0)
    g_all = np.tile(gg, (hh.shape[0], 1))
    r_all = np.tile(rg, hh.shape[0])
    w_all = np.outer(whh, wg).ravel() * kernel.c_const * (2.0 * math.pi) ** -3

    afact = np.array([math.factorial(a) * math.factorial(b) * math.factorial(c) for a, b, c in alphas], float)
    out = np.zeros((len(alphas), len(lams) * len(kappas)))
    for start in range(0, h_all.shape[0], chunk):
        h = h_all[start : start + chunk]
        g = g_all[start : start + chunk]
        rr = r_all[start : start + chunk]
        v, vs = h + 0.5 * g, h - 0.5 * g
        gp = ea * g[:, None, :] + eb * rr[:, None, None] * sig[None, :, :]
        vp = h[:, None, :] + 0.5 * gp
        post = np.einsum("s,psa->pa", ws, _hermite_products(vp, alphas))
        pre = 4.0 * math.pi * _hermite_products(v, alphas)
        if symmetric:
            vsp = h[:, None, :] - 0.5 * gp
            post_s = np.einsum("s,psa->pa", ws, _hermite_products(vsp, alphas))
            pre_s = 4.0 * math.pi * _hermite_products(vs, alphas)
            delta = 0.5 * (post + post_s - pre - pre_s)
        else:
            delta = post - pre
        hl = _hermite_products(v, lams)
        hk = _hermite_products(vs, kappas)
        pair = (hl[:, :, None] * hk[:, None, :]).reshape(h.shape[0], -1)
        out += (delta * w_all[start : start + chunk, None]).T @ pair
    out /= afact[:, None]
    return out.reshape(len(alphas), len(lams), len(kappas))


def oracle_A(alpha, lam, kappa, kernel: KernelSpec, resolution: int | None = None, symmetric: bool = False) -> float:
    """Direct quadrature of one collision coefficient.

    Emits ``OracleAccuracyWarning`` if ``resolution`` is too small to be exact
    for the requested degrees.
    """
    return float(oracle_block([alpha], [lam], [kappa], kernel, resolution, symmetric)[0, 0, 0])
