"""Macroscopic fields from Hermite coefficients about an arbitrary center."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import ExpansionCenter, SpectralState, n_basis, rank


class NonPositiveStateError(ValueError):
    """Density or temperature extracted from a state is not positive."""


@dataclass(frozen=True)
class MacroState:
    rho: float
    u: np.ndarray
    theta: float
    sigma: np.ndarray
    q: np.ndarray


def _e(*ks):
    a = [0, 0, 0]
    for k in ks:
        a[k] += 1
    return rank(a)


_R1 = np.array([_e(k) for k in range(3)])
_R2 = np.array([[_e(k, l) for l in range(3)] for k in range(3)])
_R3 = np.array([[_e(k, l, l) for l in range(3)] for k in range(3)])  # e_k + 2 e_l


def macro_fields(coeffs, u_bar, t_bar, check: bool = True):
    """Vectorized moments of coefficient rows ``coeffs`` (..., N).

    Returns (rho, u, theta, sigma, q) with shapes (...), (..., 3), (...),
    (..., 3, 3), (..., 3).
    """
    f = np.asarray(coeffs, dtype=float)
    if f.shape[-1] < n_basis(3):
        # truncated expansion: the missing coefficients are zero
        f = np.concatenate([f, np.zeros(f.shape[:-1] + (n_basis(3) - f.shape[-1],))], axis=-1)
    ub = np.broadcast_to(np.asarray(u_bar, dtype=float), f.shape[:-1] + (3,))
    tb = np.broadcast_to(np.asarray(t_bar, dtype=float), f.shape[:-1])
    st = np.sqrt(tb)
    rho = f[..., 0]
    if check and np.any(~(rho > 0)):
        raise NonPositiveStateError(f"non-positive density (min {np.min(rho)})")

    f1 = f[..., _R1]
    f2 = f[..., _R2]  # f_{e_k + e_l}
    f3 = f[..., _R3]  # f_{e_k + 2 e_l}
    diag2 = np.diagonal(f2, axis1=-2, axis2=-1)  # f_{2 e_k}
    u = ub + (st / rho)[..., None] * f1
    du = ub - u  # ubar - u
    du2 = np.sum(du * du, axis=-1)
    theta = 2.0 * tb / (3.0 * rho) * diag2.sum(-1) + tb - du2 / 3.0
    if check and np.any(~(theta > 0)):
        raise NonPositiveStateError(f"non-positive temperature (min {np.min(theta)})")

    eye = np.eye(3)
    sigma = (
        (1.0 + eye) * tb[..., None, None] * f2
        + eye * (rho * (tb - theta))[..., None, None]
        - rho[..., None, None] * du[..., :, None] * du[..., None, :]
    )
    sigma = 0.5 * (sigma + np.swapaxes(sigma, -1, -2))

    t32 = (tb ** 1.5)[..., None]
    q = (
        2.0 * t32 * f[..., _R3[np.arange(3), np.arange(3)]]
        + du * tb[..., None] * diag2
        + (du2 * st)[..., None] * f1
        + t32 * f3.sum(-1)
        + tb[..., None] * np.einsum("...l,...kl->...k", du, f2)
        + du * (tb * diag2.sum(-1))[..., None]
    )
    return rho, u, theta, sigma, q


def macro_from_state(state: SpectralState) -> MacroState:
    rho, u, theta, sigma, q = macro_fields(state.coeffs, state.center.u_bar, state.center.t_bar)
    return MacroState(float(rho), u, float(theta), sigma, q)


def local_center_of(state: SpectralState) -> ExpansionCenter:
    """Local (u, theta) of a state as an expansion center."""
    ms = macro_from_state(state)
    return ExpansionCenter(tuple(ms.u), ms.theta)
