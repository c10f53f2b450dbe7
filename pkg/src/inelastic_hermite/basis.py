"""Multi-indices, Hermite polynomial algebra and change of expansion center.

Basis functions are ordered by ascending total degree and, inside one degree,
lexicographically descending on ``(a1, a2, a3)``::

    rank (0,0,0) = 0, rank (1,0,0) = 1, rank (0,1,0) = 2, rank (0,0,1) = 3,
    rank (2,0,0) = 4, ...

The same ordering is used by the binary coefficient cache (tag ``ORDERING_TAG``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

ORDERING_TAG = 1  # degree-major, lexicographically descending within a degree


class InvalidCenterError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class MultiIndex:
    a1: int
    a2: int
    a3: int

    def __post_init__(self):
        if min(self.a1, self.a2, self.a3) < 0:
            raise ValueError(f"negative multi-index component in {tuple(self)}")

    def __iter__(self) -> Iterator[int]:
        return iter((self.a1, self.a2, self.a3))

    @property
    def degree(self) -> int:
        return self.a1 + self.a2 + self.a3

    @property
    def rank(self) -> int:
        return rank(self)

    @property
    def factorial(self) -> int:
        return math.factorial(self.a1) * math.factorial(self.a2) * math.factorial(self.a3)


def _as_tuple(alpha) -> tuple[int, int, int]:
    a = tuple(int(x) for x in alpha)
    if len(a) != 3:
        raise ValueError("multi-index must have three components")
    return a


def n_basis(m: int) -> int:
    """Number of multi-indices with degree <= m."""
    return (m + 1) * (m + 2) * (m + 3) // 6


def rank(alpha) -> int:
    a1, a2, a3 = _as_tuple(alpha)
    n = a1 + a2 + a3
    # indices of degree n with first component > a1, then second component > a2
    before_first = (n - a1) * (n - a1 + 1) // 2
    return n_basis(n - 1) + before_first + (n - a1 - a2)


def unrank(r: int) -> MultiIndex:
    if r < 0:
        raise ValueError("rank must be non-negative")
    n = 0
    while n_basis(n) <= r:
        n += 1
    off = r - n_basis(n - 1)
    for a1 in range(n, -1, -1):
        width = n - a1 + 1
        if off < width:
            a2 = n - a1 - off
            return MultiIndex(a1, a2, n - a1 - a2)
        off -= width
    raise AssertionError("unreachable")


def enumerate_indices(m: int) -> list[tuple[int, int, int]]:
    out = []
    for n in range(m + 1):
        for a1 in range(n, -1, -1):
            for a2 in range(n - a1, -1, -1):
                out.append((a1, a2, n - a1 - a2))
    return out


@lru_cache(maxsize=None)
def index_set(m: int) -> "IndexSet":
    return IndexSet(m)


class IndexSet:
    """Precomputed index tables for all multi-indices of degree <= m.

    ``up[d]`` / ``down[d]`` / ``down2[d]`` hold the rank of ``alpha +- e_d`` and
    ``alpha - 2 e_d`` (-1 when out of range). Tables are immutable after build.
    """

    def __init__(self, m: int):
        if m < 0:
            raise ValueError("order must be non-negative")
        self.m = m
        self.size = n_basis(m)
        self.alphas = np.array(enumerate_indices(m), dtype=np.int64).reshape(-1, 3)
        self.degree = self.alphas.sum(axis=1)
        self.factorial = np.array(
            [math.factorial(a) * math.factorial(b) * math.factorial(c) for a, b, c in self.alphas],
            dtype=float,
        )
        up = np.full((3, self.size), -1, dtype=np.int64)
        down = np.full((3, self.size), -1, dtype=np.int64)
        down2 = np.full((3, self.size), -1, dtype=np.int64)
        for r, a in enumerate(self.alphas):
            for d in range(3):
                b = a.copy()
                b[d] += 1
                if b.sum() <= m:
                    up[d, r] = rank(b)
                b[d] -= 2
                if b[d] >= 0:
                    down[d, r] = rank(b)
                b[d] -= 1
                if b[d] >= 0:
                    down2[d, r] = rank(b)
        for arr in (up, down, down2, self.alphas, self.degree, self.factorial):
            arr.setflags(write=False)
        self.up, self.down, self.down2 = up, down, down2

    def rank_of(self, alpha) -> int:
        r = rank(alpha)
        if r >= self.size:
            raise IndexError(f"{tuple(alpha)} exceeds order {self.m}")
        return r

    def __len__(self) -> int:
        return self.size


# ---------------------------------------------------------------------------
# one-dimensional Hermite algebra (probabilists' convention)


def hermite_eval_1d(n: int, x):
    """He_n(x) by the three-term recurrence He_{k+1} = x He_k - k He_{k-1}."""
    if n < 0:
        raise ValueError("degree must be non-negative")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = x.copy()
    for k in range(1, n):
        h_prev, h = h, x * h - k * h_prev
    return h if h.ndim else float(h)


def hermite_eval_table(nmax: int, x) -> np.ndarray:
    """Stack of He_0..He_nmax evaluated at ``x``; shape (nmax+1, *x.shape)."""
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = 1.0
    if nmax >= 1:
        out[1] = x
    for k in range(1, nmax):
        out[k + 1] = x * out[k] - k * out[k - 1]
    return out


@lru_cache(maxsize=None)
def _hermite_coeff_row(n: int) -> tuple[int, ...]:
    if n == 0:
        return (1,)
    if n == 1:
        return (0, 1)
    p1 = _hermite_coeff_row(n - 1)
    p2 = _hermite_coeff_row(n - 2)
    row = [0] * (n + 1)
    for k, c in enumerate(p1):
        row[k + 1] += c
    for k, c in enumerate(p2):
        row[k] -= (n - 1) * c
    return tuple(row)


def hermite_coeff(n: int, k: int) -> int:
    """Integer coefficient of x**k in He_n(x)."""
    if n < 0 or k < 0 or k > n:
        return 0
    return _hermite_coeff_row(n)[k]


def largest_hermite_root(n: int) -> float:
    """Largest root of He_n via the symmetric Jacobi matrix eigenvalues."""
    if n < 1:
        raise ValueError("degree must be >= 1")
    if n == 1:
        return 0.0
    off = np.sqrt(np.arange(1, n, dtype=float))
    ev = eigh_tridiagonal(np.zeros(n), off, eigvals_only=True, select="i", select_range=(n - 1, n - 1))
    return float(ev[-1])


# ---------------------------------------------------------------------------
# expansion centers and states


@dataclass(frozen=True)
class ExpansionCenter:
    u_bar: tuple[float, float, float] = (0.0, 0.0, 0.0)
    t_bar: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "u_bar", tuple(float(x) for x in self.u_bar))
        if len(self.u_bar) != 3:
            raise InvalidCenterError("center velocity must be a 3-vector")
        if not (self.t_bar > 0) or not math.isfinite(self.t_bar):
            raise InvalidCenterError(f"center temperature must be positive, got {self.t_bar}")


@dataclass
class SpectralState:
    """Coefficients f_alpha (indexed by rank, |alpha| <= m) about ``center``."""

    coeffs: np.ndarray
    center: ExpansionCenter = field(default_factory=ExpansionCenter)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        m = order_of_size(self.coeffs.shape[-1])
        self.m = m

    @classmethod
    def maxwellian(cls, m: int, rho: float = 1.0, center: ExpansionCenter | None = None):
        c = np.zeros(n_basis(m))
        c[0] = rho
        return cls(c, center or ExpansionCenter())

    def copy(self) -> "SpectralState":
        return SpectralState(self.coeffs.copy(), self.center)


def order_of_size(size: int) -> int:
    m = 0
    while n_basis(m) < size:
        m += 1
    if n_basis(m) != size:
        raise ValueError(f"{size} coefficients do not form a complete degree set")
    return m


def basis_eval(alpha, center: ExpansionCenter, v, weighted: bool = False):
    """H_alpha about ``center`` at velocity ``v`` (last axis of size 3).

    With ``weighted=True`` the Gaussian weight omega_{u,T} is included.
    """
    a = _as_tuple(alpha)
    v = np.asarray(v, dtype=float)
    sq = math.sqrt(center.t_bar)
    x = (v - np.asarray(center.u_bar)) / sq
    val = np.ones(v.shape[:-1])
    for d in range(3):
        val = val * hermite_eval_1d(a[d], x[..., d])
    if weighted:
        val = val * np.exp(-0.5 * np.sum(x * x, axis=-1)) / (2 * math.pi * center.t_bar) ** 1.5
    return val if val.ndim else float(val)


# ---------------------------------------------------------------------------
# projection between expansion centers


def project_coeffs(
    coeffs: np.ndarray,
    src_u: np.ndarray,
    src_t,
    dst_u: np.ndarray,
    dst_t,
) -> np.ndarray:
    """Vectorized center change.

    ``coeffs`` has shape (..., N); ``src_u``/``dst_u`` broadcast to (..., 3) and
    temperatures to (...). The transform is triangular in degree, hence exact
    for truncated expansions.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    ids = index_set(order_of_size(coeffs.shape[-1]))
    src_t = np.asarray(src_t, dtype=float)[..., None]
    dst_t = np.asarray(dst_t, dtype=float)[..., None]
    if np.any(dst_t <= 0) or np.any(src_t <= 0):
        raise InvalidCenterError("center temperature must be positive")
    du = np.asarray(src_u, dtype=float) - np.asarray(dst_u, dtype=float)
    half_dt = 0.5 * (src_t - dst_t)
    deg = ids.degree

    phi = coeffs * src_t ** (0.5 * deg)
    total = phi.copy()
    pad_shape = phi.shape[:-1] + (1,)
    for level in range(1, ids.m + 1):
        padded = np.concatenate([phi, np.zeros(pad_shape)], axis=-1)  # index -1 -> zero
        nxt = np.zeros_like(phi)
        for d in range(3):
            nxt += du[..., d : d + 1] * padded[..., ids.down[d]]
            nxt += half_dt * padded[..., ids.down2[d]]
        phi = nxt / level
        total += phi
    return total * dst_t ** (-0.5 * deg)


def project(state: SpectralState, target: ExpansionCenter) -> SpectralState:
    if not isinstance(target, ExpansionCenter):
        raise InvalidCenterError("target must be an ExpansionCenter")
    if target == state.center:
        return state.copy()
    out = project_coeffs(
        state.coeffs,
        np.asarray(state.center.u_bar),
        state.center.t_bar,
        np.asarray(target.u_bar),
        target.t_bar,
    )
    return SpectralState(out, target)


def iter_sub_indices(alpha: Sequence[int], parity: bool = False):
    """All j <= alpha componentwise; with ``parity`` only those with alpha - j even."""
    a1, a2, a3 = alpha
    start = (a1 % 2, a2 % 2, a3 % 2) if parity else (0, 0, 0)
    step = 2 if parity else 1
    for j1 in range(start[0], a1 + 1, step):
        for j2 in range(start[1], a2 + 1, step):
            for j3 in range(start[2], a3 + 1, step):
                yield (j1, j2, j3)
