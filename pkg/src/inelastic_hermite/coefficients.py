"""Quadratic collision coefficients A[alpha, lambda, kappa] for VHS kernels.

The eight-dimensional collision integral is reduced to finite sums:

* ``sphere_moment``   -- integral of sigma**kappa over the unit sphere
* ``gaussian_moment`` -- integral of v**kappa H_alpha(v) |v|**mu omega(v)
* ``coeff_D`` / ``coeff_psi`` -- post-/pre-collision relative-velocity integrals
* ``gamma_coeff``     -- their kernel-weighted difference
* ``c_coeff``         -- 1D Hermite product-transform coefficients
* ``assemble_tensor`` -- the full sparse tensor at expansion center (0, 1)

For integer ``mu`` (Maxwell and hard-sphere kernels) the Gaussian moments are
summed in exact rational arithmetic, so structural zeros come out as exact
zeros instead of ~1e-13 cancellation residue.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .basis import (
    ORDERING_TAG,
    IndexSet,
    hermite_coeff,
    index_set,
    iter_sub_indices,
    n_basis,
)

log = logging.getLogger(__name__)

DEFAULT_DROP_TOL = 1e-14
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class KernelSpec:
    """VHS kernel B = c_const |g|**(2(1 - varpi)) with restitution coefficient e."""

    varpi: float
    c_const: float
    e: float

    def __post_init__(self):
        if not 0.5 <= self.varpi <= 1.0:
            raise ValueError(f"varpi must lie in [0.5, 1], got {self.varpi}")
        if not 0.0 <= self.e <= 1.0:
            raise ValueError(f"restitution coefficient must lie in [0, 1], got {self.e}")
        if not self.c_const > 0:
            raise ValueError("kernel constant must be positive")

    @property
    def mu(self) -> float:
        return 2.0 * (1.0 - self.varpi)

    @classmethod
    def maxwell(cls, e: float, c_const: float = 1.0 / (4.0 * math.pi)) -> "KernelSpec":
        return cls(1.0, c_const, e)

    @classmethod
    def hard_sphere(cls, e: float, c_const: float = 1.0 / (4.0 * math.sqrt(2.0) * math.pi)) -> "KernelSpec":
        return cls(0.5, c_const, e)


# ---------------------------------------------------------------------------
# elementary sums


def double_factorial(n: int) -> int:
    """n!! with (-1)!! = 0!! = 1."""
    if n < -1:
        raise ValueError("double factorial undefined below -1")
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def _sphere_ratio(p) -> Fraction:
    """sphere_moment(p) / (4 pi) as an exact fraction (0 for any odd component)."""
    if any(x % 2 for x in p):
        return Fraction(0)
    num = 1
    for x in p:
        num *= double_factorial(x - 1)
    return Fraction(num, double_factorial(sum(p) + 1))


def sphere_moment(kappa) -> float:
    """Integral over the unit sphere of sigma1**k1 sigma2**k2 sigma3**k3."""
    return 4.0 * math.pi * float(_sphere_ratio(tuple(kappa)))


def _is_integer(mu: float) -> bool:
    return float(mu).is_integer()


def _radial_exact(n: int, ratio: Fraction):
    """(2 pi)^{-3/2} 2^{(1+n)/2} Gamma((3+n)/2) * 4 pi * ratio, split as (rational, irrational factor).

    For even n the value is rational; for odd n it is sqrt(2/pi) times a rational.
    """
    if n % 2 == 0:
        # Gamma(k + 1/2) = (2k-1)!! sqrt(pi) / 2^k with k = 1 + n/2
        return ratio * double_factorial(n + 1), 1.0
    half = (n + 1) // 2
    return ratio * (2**half) * math.factorial(half), _SQRT_2_OVER_PI


def gaussian_moment(kappa, alpha, mu: float) -> float:
    """Integral of v**kappa H_alpha(v) |v|**mu omega(v) over R^3 (center (0, 1)).

    Summed over j <= alpha with alpha - j even, using the radial Gamma integral
    and ``sphere_moment(j + kappa)``.
    """
    kappa = tuple(int(x) for x in kappa)
    alpha = tuple(int(x) for x in alpha)
    if mu < 0:
        raise ValueError("mu must be non-negative")
    if _is_integer(mu):
        return _gaussian_moment_exact(kappa, alpha, int(mu))
    total = 0.0
    for j in iter_sub_indices(alpha, parity=True):
        p = (j[0] + kappa[0], j[1] + kappa[1], j[2] + kappa[2])
        s = sphere_moment(p)
        if s == 0.0:
            continue
        c = hermite_coeff(alpha[0], j[0]) * hermite_coeff(alpha[1], j[1]) * hermite_coeff(alpha[2], j[2])
        n = mu + sum(p)
        total += c * 2.0 ** ((1.0 + n) / 2.0) * math.gamma((3.0 + n) / 2.0) * s
    return total * (2.0 * math.pi) ** -1.5


@lru_cache(maxsize=None)
def _gaussian_moment_exact(kappa, alpha, mu: int) -> float:
    total = Fraction(0)
    factor = 1.0
    for j in iter_sub_indices(alpha, parity=True):
        p = (j[0] + kappa[0], j[1] + kappa[1], j[2] + kappa[2])
        ratio = _sphere_ratio(p)
        if not ratio:
            continue
        c = hermite_coeff(alpha[0], j[0]) * hermite_coeff(alpha[1], j[1]) * hermite_coeff(alpha[2], j[2])
        val, factor = _radial_exact(mu + sum(p), ratio)
        total += c * val
    return float(total) * factor if total else 0.0


def _hermite_multi_coeff(alpha, lam) -> int:
    return hermite_coeff(alpha[0], lam[0]) * hermite_coeff(alpha[1], lam[1]) * hermite_coeff(alpha[2], lam[2])


def _binom3(lam, kap) -> int:
    return math.comb(lam[0], kap[0]) * math.comb(lam[1], kap[1]) * math.comb(lam[2], kap[2])


def coeff_psi(alpha, beta, mu: float) -> float:
    """Pre-collision integral: 4 pi sum_{lambda} C(alpha, lambda) V(lambda, beta, mu)."""
    total = 0.0
    for lam in iter_sub_indices(tuple(alpha), parity=True):
        total += _hermite_multi_coeff(alpha, lam) * gaussian_moment(lam, beta, mu)
    return 4.0 * math.pi * total


def coeff_D(alpha, beta, mu: float, kernel: KernelSpec | float) -> float:
    """Post-collision integral of H_alpha(g') H_beta(g) |g|**mu omega(g) over g and sigma.

    ``kernel`` may be a KernelSpec or just the restitution coefficient.
    """
    e = kernel.e if isinstance(kernel, KernelSpec) else float(kernel)
    a, b = (1.0 - e) / 2.0, (1.0 + e) / 2.0
    total = 0.0
    for lam in iter_sub_indices(tuple(alpha), parity=True):
        c = _hermite_multi_coeff(alpha, lam)
        inner = 0.0
        nl = sum(lam)
        for kap in iter_sub_indices(lam, parity=True):
            nk = sum(kap)
            s = sphere_moment((lam[0] - kap[0], lam[1] - kap[1], lam[2] - kap[2]))
            inner += _binom3(lam, kap) * a**nk * b ** (nl - nk) * s * gaussian_moment(kap, beta, nl - nk + mu)
        total += c * inner
    return total


def gamma_coeff(kappa, j, kernel: KernelSpec) -> float:
    """C 2^{5/2 - varpi} [D(j, kappa, mu) - psi(j, kappa, mu)] with mu = 2(1 - varpi)."""
    mu = kernel.mu
    return kernel.c_const * 2.0 ** (2.5 - kernel.varpi) * (coeff_D(j, kappa, mu, kernel) - coeff_psi(j, kappa, mu))


def c_coeff(l: int, k: int, l_prime: int) -> float:
    """Coefficient of H_{l'}(sqrt2 h) H_{k'}(g/sqrt2) in H_l(h + g/2) H_k(h - g/2), k' = l + k - l'."""
    k_prime = l + k - l_prime
    if l_prime < 0 or k_prime < 0 or l < 0 or k < 0:
        return 0.0
    return 2.0 ** (-(l_prime + k_prime) / 2.0) * _c_integer(l, k, l_prime)


def _c_integer(l: int, k: int, l_prime: int) -> int:
    total = 0
    for s in range(0, min(l, l_prime) + 1):
        if l_prime - s > k:
            continue
        total += math.comb(l, s) * math.comb(k, l_prime - s) * (-1) ** (k - l_prime + s)
    return total


# ---------------------------------------------------------------------------
# tensor container


@dataclass
class CollisionTensor:
    """Sparse A[alpha, lambda, kappa] stored as rank triples sorted by (alpha, lambda, kappa)."""

    m: int
    kernel: KernelSpec
    alpha: np.ndarray
    lam: np.ndarray
    kappa: np.ndarray
    values: np.ndarray
    drop_tol: float = DEFAULT_DROP_TOL
    symmetric: bool = True
    t_scale: float = 1.0
    ordering: int = ORDERING_TAG
    _csr_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.alpha = np.ascontiguousarray(self.alpha, dtype=np.uint32)
        self.lam = np.ascontiguousarray(self.lam, dtype=np.uint32)
        self.kappa = np.ascontiguousarray(self.kappa, dtype=np.uint32)
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        for arr in (self.alpha, self.lam, self.kappa, self.values):
            arr.setflags(write=False)

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    @property
    def size(self) -> int:
        return n_basis(self.m)

    def to_dict(self) -> dict[tuple[int, int, int], float]:
        return {
            (int(a), int(l), int(k)): float(v)
            for a, l, k, v in zip(self.alpha, self.lam, self.kappa, self.values)
        }

    def get(self, alpha_rank: int, lam_rank: int, kappa_rank: int) -> float:
        key = (alpha_rank * self.size + lam_rank) * self.size + kappa_rank
        keys = self._linear_keys()
        pos = np.searchsorted(keys, key)
        if pos < keys.size and keys[pos] == key:
            return float(self.values[pos])
        return 0.0

    def _linear_keys(self) -> np.ndarray:
        if "keys" not in self._csr_cache:
            n = self.size
            self._csr_cache["keys"] = (self.alpha.astype(np.int64) * n + self.lam) * n + self.kappa
        return self._csr_cache["keys"]

    def dense(self, band: int | None = None) -> np.ndarray:
        band = self.m if band is None else band
        n = n_basis(band)
        out = np.zeros((n, n, n))
        mask = (self.alpha < n) & (self.lam < n) & (self.kappa < n)
        out[self.alpha[mask], self.lam[mask], self.kappa[mask]] = self.values[mask]
        return out

    def matrix(self, band: int | None = None) -> sp.csr_matrix:
        """CSR matrix of shape (N_band, N_band**2) so that Q = A @ kron(f, f)."""
        band = self.m if band is None else band
        if band > self.m:
            raise ValueError(f"band {band} exceeds tensor order {self.m}")
        if band not in self._csr_cache:
            n = n_basis(band)
            mask = (self.alpha < n) & (self.lam < n) & (self.kappa < n)
            rows = self.alpha[mask].astype(np.int64)
            cols = self.lam[mask].astype(np.int64) * n + self.kappa[mask]
            self._csr_cache[band] = sp.csr_matrix((self.values[mask], (rows, cols)), shape=(n, n * n))
        return self._csr_cache[band]

    def scaled(self, factor: float, t_scale: float | None = None) -> "CollisionTensor":
        return CollisionTensor(
            self.m,
            self.kernel,
            self.alpha,
            self.lam,
            self.kappa,
            self.values * factor,
            self.drop_tol,
            self.symmetric,
            self.t_scale if t_scale is None else t_scale,
        )

    def same_entries(self, other: "CollisionTensor") -> bool:
        return (
            self.m == other.m
            and np.array_equal(self.alpha, other.alpha)
            and np.array_equal(self.lam, other.lam)
            and np.array_equal(self.kappa, other.kappa)
            and np.array_equal(self.values, other.values)
        )


def rescale_center(tensor: CollisionTensor, t_bar: float) -> CollisionTensor:
    """Coefficients about a center with temperature ``t_bar``: multiply by t_bar**(1 - varpi)."""
    if not t_bar > 0:
        raise ValueError("center temperature must be positive")
    return tensor.scaled(t_bar ** (1.0 - tensor.kernel.varpi), t_scale=tensor.t_scale * t_bar)


# ---------------------------------------------------------------------------
# vectorized assembly


class _Tables:
    """Everything the assembly needs for one (m, kernel)."""

    def __init__(self, m: int, kernel: KernelSpec):
        self.m = m
        self.kernel = kernel
        self.small: IndexSet = index_set(m)
        self.big: IndexSet = index_set(2 * m)
        big_alphas = self.big.alphas
        top = 2 * m + 1
        self.rank3 = np.full((top, top, top), -1, dtype=np.int64)
        self.rank3[big_alphas[:, 0], big_alphas[:, 1], big_alphas[:, 2]] = np.arange(self.big.size)
        self.c1 = np.zeros((m + 1, m + 1, 2 * m + 1))
        for l in range(m + 1):
            for k in range(m + 1):
                for lp in range(l + k + 1):
                    self.c1[l, k, lp] = c_coeff(l, k, lp)

    def hermite_matrix(self) -> np.ndarray:
        """C(j, lambda) for |j|, |lambda| <= m."""
        n = self.small.size
        out = np.zeros((n, n))
        for r, a in enumerate(self.small.alphas):
            for lam in iter_sub_indices(tuple(a), parity=True):
                out[r, self.small.rank_of(lam)] = _hermite_multi_coeff(a, lam)
        return out

    def moment_matrix(self, nu: float, max_row_degree: int) -> np.ndarray:
        """V(kappa, beta, nu) for |kappa| <= max_row_degree, |beta| <= 2m."""
        rows = n_basis(max_row_degree)
        out = np.zeros((rows, self.big.size))
        big = self.big.alphas
        parity_big = big % 2
        for r in range(rows):
            kap = tuple(int(x) for x in self.small.alphas[r])
            same = np.nonzero(np.all(parity_big == np.array(kap) % 2, axis=1))[0]
            for c in same:
                out[r, c] = gaussian_moment(kap, tuple(int(x) for x in big[c]), nu)
        return out

    def gamma_table(self) -> np.ndarray:
        """gamma_{kappa'}^{j} / j! indexed [rank j (|j|<=m), rank kappa' (|kappa'|<=2m)]."""
        m, kernel = self.m, self.kernel
        mu = kernel.mu
        a, b = (1.0 - kernel.e) / 2.0, (1.0 + kernel.e) / 2.0
        small = self.small
        n = small.size
        herm = self.hermite_matrix()
        v_mats = [self.moment_matrix(mu + 2 * k, m - 2 * k) for k in range(m // 2 + 1)]

        # E[lambda, kappa'] = integral of g'^lambda H_kappa'(g) |g|^mu omega over g, sigma
        e_mat = np.zeros((n, self.big.size))
        for r, lam in enumerate(small.alphas):
            lam = tuple(int(x) for x in lam)
            nl = sum(lam)
            for kap in iter_sub_indices(lam, parity=True):
                nk = sum(kap)
                w = _binom3(lam, kap) * a**nk * b ** (nl - nk) * sphere_moment(
                    (lam[0] - kap[0], lam[1] - kap[1], lam[2] - kap[2])
                )
                if w == 0.0:
                    continue
                e_mat[r] += w * v_mats[(nl - nk) // 2][small.rank_of(kap)]
        d_mat = herm @ e_mat
        psi_mat = 4.0 * math.pi * (herm @ v_mats[0][:n])
        gam = kernel.c_const * 2.0 ** (2.5 - kernel.varpi) * (d_mat - psi_mat)
        return gam / small.factorial[:, None]


def _pair_classes(small: IndexSet):
    """Group (lambda, kappa) rank pairs by the componentwise parity of lambda + kappa."""
    n = small.size
    par = small.alphas % 2
    code = par[:, 0] * 4 + par[:, 1] * 2 + par[:, 2]
    classes = {}
    for cl in range(8):
        li, ki = np.nonzero((code[:, None] ^ code[None, :]) == cl)
        classes[cl] = (li, ki)
    return classes, code


def _alpha_slab(ar, tables: _Tables, gam_over_fact, classes, code, symmetric, drop_tol):
    small = tables.small
    n = small.size
    alpha = small.alphas[ar]
    li, ki = classes[int(code[ar])]
    if li.size == 0:
        return None
    la = small.alphas[li]
    ka = small.alphas[ki]
    ssum = la + ka
    acc = np.zeros(li.size)
    for lp in iter_sub_indices(tuple(int(x) for x in alpha)):
        lp = np.array(lp)
        kp = ssum - lp
        ok = np.all(kp >= 0, axis=1)
        if not ok.any():
            continue
        c = (
            tables.c1[la[:, 0], ka[:, 0], lp[0]]
            * tables.c1[la[:, 1], ka[:, 1], lp[1]]
            * tables.c1[la[:, 2], ka[:, 2], lp[2]]
        )
        kp = np.where(ok[:, None], kp, 0)
        col = tables.rank3[kp[:, 0], kp[:, 1], kp[:, 2]]
        jr = small.rank_of(alpha - lp)
        acc += np.where(ok, c * gam_over_fact[jr, col], 0.0)
    acc *= 2.0 ** (-(small.degree[ar] + 3) / 2.0)
    if symmetric:
        dense = np.zeros((n, n))
        dense[li, ki] = acc
        dense = 0.5 * (dense + dense.T)
        acc = dense[li, ki]
    keep = np.abs(acc) > drop_tol
    return li[keep], ki[keep], acc[keep]


def assemble_tensor(
    m: int,
    kernel: KernelSpec,
    drop_tol: float = DEFAULT_DROP_TOL,
    symmetric: bool = True,
    workers: int = 1,
) -> CollisionTensor:
    """Sparse collision tensor for all |alpha|, |lambda|, |kappa| <= m at center (0, 1).

    ``symmetric=True`` stores the coefficients of the symmetrized weak form,
    (A[a, l, k] + A[a, k, l]) / 2, which leaves Q unchanged and makes the
    mass/momentum rows vanish entry by entry. ``symmetric=False`` keeps the raw
    coefficients of the one-sided weak form.
    """
    if m < 0:
        raise ValueError("order must be non-negative")
    if drop_tol < 0:
        raise ValueError("drop tolerance must be non-negative")
    tables = _Tables(m, kernel)
    gam = tables.gamma_table()
    classes, code = _pair_classes(tables.small)
    n = tables.small.size

    def work(ar):
        return ar, _alpha_slab(ar, tables, gam, classes, code, symmetric, drop_tol)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            slabs = list(pool.map(work, range(n)))
    else:
        slabs = [work(ar) for ar in range(n)]

    parts_a, parts_l, parts_k, parts_v = [], [], [], []
    for ar, slab in slabs:
        if slab is None:
            continue
        li, ki, vals = slab
        order = np.lexsort((ki, li))
        parts_a.append(np.full(li.size, ar, dtype=np.uint32))
        parts_l.append(li[order])
        parts_k.append(ki[order])
        parts_v.append(vals[order])
    cat = (lambda xs, dt: np.concatenate(xs).astype(dt) if xs else np.zeros(0, dtype=dt))
    tensor = CollisionTensor(
        m,
        kernel,
        cat(parts_a, np.uint32),
        cat(parts_l, np.uint32),
        cat(parts_k, np.uint32),
        cat(parts_v, np.float64),
        drop_tol=drop_tol,
        symmetric=symmetric,
    )
    log.info("assembled order-%d tensor: %d nonzeros", m, tensor.nnz)
    return tensor


def coefficient_A(alpha, lam, kappa, kernel: KernelSpec) -> float:
    """Single raw coefficient straight from the summation formula (no tables)."""
    alpha, lam, kappa = (tuple(int(x) for x in t) for t in (alpha, lam, kappa))
    total = 0.0
    for lp in iter_sub_indices(alpha):
        kp = tuple(lam[d] + kappa[d] - lp[d] for d in range(3))
        if min(kp) < 0:
            continue
        c = c_coeff(lam[0], kappa[0], lp[0]) * c_coeff(lam[1], kappa[1], lp[1]) * c_coeff(lam[2], kappa[2], lp[2])
        if c == 0.0:
            continue
        j = tuple(alpha[d] - lp[d] for d in range(3))
        jf = math.factorial(j[0]) * math.factorial(j[1]) * math.factorial(j[2])
        total += c / jf * gamma_coeff(kp, j, kernel)
    return total * 2.0 ** (-(sum(alpha) + 3) / 2.0)
