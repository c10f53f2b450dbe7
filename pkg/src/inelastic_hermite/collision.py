"""Collision spectra: exact quadratic part, linearized ES-BGK with drift, and the hybrid."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import SpectralState, index_set, n_basis, rank
from .coefficients import CollisionTensor

_T_MATCH_RTOL = 1e-12
LOCAL_FRAME_TOL = 1e-8


class ConfigurationError(ValueError):
    pass


class LocalFrameError(ValueError):
    """State is not expanded about its own velocity and temperature."""


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class CollisionModelParams:
    """[m0, m] orders and rates of the hybrid model.

    ``nu1`` and ``nu2`` are the rates at unit temperature and unit density;
    the solver multiplies them by theta**(1 - varpi) of the local cell.
    """

    m0: int
    m: int
    nu1: float
    nu2: float
    prandtl: float = 2.0 / 3.0

    def __post_init__(self):
        if not 0 <= self.m0 <= self.m:
            raise ConfigurationError(f"need 0 <= m0 <= m, got m0={self.m0}, m={self.m}")
        if not self.nu1 > 0:
            raise ConfigurationError("nu1 must be positive")
        if not self.nu2 >= 0:
            raise ConfigurationError("nu2 must be non-negative")
        if not self.prandtl > 0:
            raise ConfigurationError("Prandtl number must be positive")

    def scaled_rates(self, factor: float) -> "CollisionModelParams":
        return CollisionModelParams(self.m0, self.m, self.nu1 * factor, self.nu2 * factor, self.prandtl)


def nu2_default(e: float) -> float:
    """Drift rate borrowed from the hard-sphere cooling rate."""
    if not 0.0 <= e <= 1.0:
        raise ValueError("restitution coefficient must lie in [0, 1]")
    return 2.0 / (3.0 * math.sqrt(math.pi)) * (1.0 - e * e)


def nu2_matched(tensor: CollisionTensor) -> float:
    """Drift rate giving the linear model the same cooling rate as the tensor.

    For hard spheres this coincides with ``nu2_default(e) * 4 pi C``.
    """
    s = sum(tensor.get(rank(a), 0, 0) for a in ((2, 0, 0), (0, 2, 0), (0, 0, 2)))
    return max(0.0, -s / 3.0) / tensor.t_scale ** (1.0 - tensor.kernel.varpi)


# ---------------------------------------------------------------------------
# quadratic part


def quadratic_batch(coeffs: np.ndarray, tensor: CollisionTensor, band: int, chunk: int = 64) -> np.ndarray:
    """Q for a batch of coefficient rows (n_cells, N_band) using the tensor as stored."""
    mat = tensor.matrix(band)
    n = mat.shape[0]
    f = np.asarray(coeffs, dtype=float)[:, :n]
    out = np.empty((f.shape[0], n))
    for s in range(0, f.shape[0], chunk):
        blk = f[s : s + chunk]
        kron = (blk[:, :, None] * blk[:, None, :]).reshape(blk.shape[0], -1)
        out[s : s + chunk] = (mat @ kron.T).T
    return out


def quadratic_spectrum(state: SpectralState, tensor: CollisionTensor, band: int) -> np.ndarray:
    """Q_alpha = sum A[alpha, lambda, kappa] f_lambda f_kappa for |alpha| <= band."""
    if band > tensor.m:
        raise ConfigurationError(f"band {band} exceeds tensor order {tensor.m}")
    if band > state.m:
        raise ConfigurationError(f"band {band} exceeds state order {state.m}")
    if abs(tensor.t_scale - state.center.t_bar) > _T_MATCH_RTOL * state.center.t_bar:
        raise ConfigurationError(
            f"tensor scaled for temperature {tensor.t_scale}, state center has {state.center.t_bar}"
        )
    return quadratic_batch(state.coeffs[None, :], tensor, band)[0]


# ---------------------------------------------------------------------------
# linear part


def esbgk_batch(rho, stress, prandtl: float, m: int, pivot: str = "first") -> np.ndarray:
    """Vectorized ES-BGK recursion: ``rho`` (...), ``stress`` (..., 3, 3)."""
    rho = np.asarray(rho, dtype=float)
    stress = np.asarray(stress, dtype=float)
    if np.any(~(rho > 0)):
        raise ValueError("density must be positive")
    ids = index_set(m)
    out = np.zeros(rho.shape + (ids.size,))
    out[..., 0] = rho
    fac = (1.0 - 1.0 / prandtl) / rho
    if prandtl == 1.0:
        return out
    for r in range(n_basis(1), ids.size):
        a = ids.alphas[r]
        pos = np.nonzero(a)[0]
        i = int(pos[0] if pivot == "first" else pos[-1])
        down_i = ids.down[i, r]
        acc = np.zeros(rho.shape)
        for k in range(3):
            src = ids.down[k, down_i]
            if src >= 0:
                acc = acc + stress[..., i, k] * out[..., src]
        out[..., r] = fac * acc / a[i]
    return out


def esbgk_spectrum(rho: float, stress, prandtl: float, m: int, pivot: str = "first") -> np.ndarray:
    """Hermite coefficients of the ES-BGK Gaussian about the local center.

    ``pivot`` picks the component i used in the recursion ("first" or "last"
    positive entry); the result does not depend on it.
    """
    if not rho > 0:
        raise ValueError("density must be positive")
    return esbgk_batch(rho, stress, prandtl, m, pivot)


def _check_local_frame(f: np.ndarray):
    tol = LOCAL_FRAME_TOL * abs(f[..., 0])
    r1 = [rank(e) for e in ((1, 0, 0), (0, 1, 0), (0, 0, 1))]
    r2 = [rank(e) for e in ((2, 0, 0), (0, 2, 0), (0, 0, 2))]
    if np.any(np.abs(f[..., r1]).max(-1) > tol) or np.any(np.abs(f[..., r2].sum(-1)) > tol):
        raise LocalFrameError("state is not expanded about its local velocity and temperature")


def _drift(f: np.ndarray, m: int) -> np.ndarray:
    """|alpha| f_alpha + sum_d f_{alpha - 2 e_d}."""
    ids = index_set(m)
    pad = np.concatenate([f, np.zeros(f.shape[:-1] + (1,))], axis=-1)
    out = ids.degree * f
    for d in range(3):
        out = out + pad[..., ids.down2[d]]
    return out


def linear_batch(coeffs: np.ndarray, theta, params: CollisionModelParams) -> np.ndarray:
    """Linear spectrum for rows expanded about their local centers (theta per row)."""
    from .macro import _R2

    f = np.asarray(coeffs, dtype=float)
    m = params.m
    _check_local_frame(f)
    rho = f[..., 0]
    theta = np.broadcast_to(np.asarray(theta, dtype=float), rho.shape)
    eye = np.eye(3)
    sigma = (1.0 + eye) * theta[..., None, None] * f[..., _R2]
    fg = esbgk_batch(rho, sigma / theta[..., None, None], params.prandtl, m)
    return params.nu1 * rho[..., None] * (fg - f) - params.nu2 * rho[..., None] * _drift(f, m)


def linear_spectrum(state: SpectralState, params: CollisionModelParams) -> np.ndarray:
    """nu1 f0 (f_G - f) - nu2 f0 (|alpha| f_alpha + sum_d f_{alpha-2e_d}) at the local center.

    The stress enters the ES-BGK recursion divided by the local temperature so
    that f_G is the Gaussian with covariance theta I + (1 - 1/Pr) sigma / rho.
    """
    if state.m != params.m:
        raise ConfigurationError(f"state order {state.m} differs from model order {params.m}")
    return linear_batch(state.coeffs[None, :], state.center.t_bar, params)[0]


# ---------------------------------------------------------------------------
# hybrid


def new_model_batch(coeffs, theta, tensor: CollisionTensor, params: CollisionModelParams, tensor_factor=1.0):
    """Hybrid spectrum for rows at their local centers.

    ``tensor_factor`` (scalar or per-row) multiplies the quadratic block, which
    is how per-cell temperature rescaling is applied without copying the tensor.
    """
    f = np.asarray(coeffs, dtype=float)
    if params.m0 > tensor.m:
        raise ConfigurationError(f"quadratic band {params.m0} exceeds tensor order {tensor.m}")
    n0 = n_basis(params.m0)
    out = np.zeros_like(f)
    if params.m0 < params.m:
        out[:, n0:] = linear_batch(f, theta, params)[:, n0:]
    quad = quadratic_batch(f, tensor, params.m0)
    out[:, :n0] = quad * np.reshape(tensor_factor, (-1, 1))
    return out


def new_model_spectrum(state: SpectralState, tensor: CollisionTensor, params: CollisionModelParams) -> np.ndarray:
    """Quadratic spectrum for |alpha| <= m0, linear branch for m0 < |alpha| <= m."""
    if state.m != params.m:
        raise ConfigurationError(f"state order {state.m} differs from model order {params.m}")
    if abs(tensor.t_scale - state.center.t_bar) > _T_MATCH_RTOL * state.center.t_bar:
        raise ConfigurationError(
            f"tensor scaled for temperature {tensor.t_scale}, state center has {state.center.t_bar}"
        )
    return new_model_batch(state.coeffs[None, :], state.center.t_bar, tensor, params)[0]


# ---------------------------------------------------------------------------
# rate estimation


def linearization_matrix(tensor: CollisionTensor, m0: int) -> np.ndarray:
    """L[alpha, lambda] = A[alpha, lambda, 0] + A[alpha, 0, lambda] for 2 <= |alpha|, |lambda| <= m0."""
    if m0 > tensor.m:
        raise ConfigurationError(f"m0={m0} exceeds tensor order {tensor.m}")
    n = n_basis(m0)
    lo = n_basis(1)
    lin = np.zeros((n, n))
    a, l, k, v = tensor.alpha, tensor.lam, tensor.kappa, tensor.values
    sel = (a < n) & (k == 0) & (l < n)
    np.add.at(lin, (a[sel], l[sel]), v[sel])
    sel = (a < n) & (l == 0) & (k < n)
    np.add.at(lin, (a[sel], k[sel]), v[sel])
    return lin[lo:, lo:]


def estimate_nu1(tensor: CollisionTensor, m0: int, override: float | None = None) -> float:
    """Damping spectral radius of the quadratic operator linearized about a unit Maxwellian."""
    if override is not None:
        if not override > 0:
            raise EstimationError("nu1 override must be positive")
        return float(override)
    if m0 < 2:
        raise EstimationError("nu1 estimation needs m0 >= 2")
    lin = linearization_matrix(tensor, m0)
    ev = np.linalg.eigvals(lin)
    damp = -ev.real[ev.real < 0]
    if damp.size == 0 or not np.any(lin):
        raise EstimationError("tensor has no damping modes on the requested band")
    return float(damp.max())
