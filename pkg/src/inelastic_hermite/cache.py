"""Binary persistence of collision tensors.

Layout (little-endian)::

    magic     4s   b"IBCT"
    version   u32
    m         u32
    varpi     f64
    e         f64
    c_const   f64
    drop_tol  f64
    nnz       u64
    ordering  u32  index ordering tag
    flags     u32  bit 0: symmetrized storage
    records   nnz x (alpha u32, lambda u32, kappa u32, value f64), sorted by (alpha, lambda, kappa)
"""
from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

from .basis import ORDERING_TAG
from .coefficients import CollisionTensor, KernelSpec

MAGIC = b"IBCT"
VERSION = 1
_HEADER = struct.Struct("<4sIIddddQII")
_RECORD = np.dtype([("a", "<u4"), ("l", "<u4"), ("k", "<u4"), ("v", "<f8")])
FLAG_SYMMETRIC = 1


class CacheError(IOError):
    pass


class IncompatibleCacheError(CacheError):
    pass


class CorruptCacheError(CacheError):
    pass


def cache_write(tensor: CollisionTensor, path) -> None:
    k = tensor.kernel
    if tensor.t_scale != 1.0:
        raise ValueError("only tensors about the unit-temperature center are cached")
    header = _HEADER.pack(
        MAGIC, VERSION, tensor.m, k.varpi, k.e, k.c_const, tensor.drop_tol, tensor.nnz,
        tensor.ordering, FLAG_SYMMETRIC if tensor.symmetric else 0,
    )
    rec = np.empty(tensor.nnz, dtype=_RECORD)
    rec["a"], rec["l"], rec["k"], rec["v"] = tensor.alpha, tensor.lam, tensor.kappa, tensor.values
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(rec.tobytes())
    os.replace(tmp, path)


def read_header(path) -> dict:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
    if len(raw) < _HEADER.size:
        raise CorruptCacheError(f"{path}: file shorter than the header")
    magic, version, m, varpi, e, c_const, drop_tol, nnz, ordering, flags = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise IncompatibleCacheError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise IncompatibleCacheError(f"{path}: unsupported version {version}")
    if ordering != ORDERING_TAG:
        raise IncompatibleCacheError(f"{path}: index ordering {ordering} differs from {ORDERING_TAG}")
    return dict(m=m, varpi=varpi, e=e, c_const=c_const, drop_tol=drop_tol, nnz=nnz, ordering=ordering,
                symmetric=bool(flags & FLAG_SYMMETRIC))


def cache_read(path, kernel: KernelSpec | None = None, m: int | None = None) -> CollisionTensor:
    """Load a tensor; with ``kernel``/``m`` given, refuse a cache built for anything else.

    A cache of higher order than ``m`` is accepted (lower bands are nested).
    """
    hdr = read_header(path)
    if kernel is not None:
        for name in ("varpi", "e", "c_const"):
            if hdr[name] != getattr(kernel, name):
                raise IncompatibleCacheError(
                    f"{path}: cache has {name}={hdr[name]!r}, requested {getattr(kernel, name)!r}"
                )
    if m is not None and hdr["m"] < m:
        raise IncompatibleCacheError(f"{path}: cache order {hdr['m']} below requested {m}")
    expected = _HEADER.size + hdr["nnz"] * _RECORD.itemsize
    size = os.path.getsize(path)
    if size != expected:
        raise CorruptCacheError(f"{path}: {size} bytes, header implies {expected}")
    rec = np.fromfile(path, dtype=_RECORD, offset=_HEADER.size, count=hdr["nnz"])
    keys = (rec["a"].astype(np.int64), rec["l"].astype(np.int64), rec["k"].astype(np.int64))
    if rec.size > 1:
        order = np.lexsort(keys[::-1])
        if not np.array_equal(order, np.arange(rec.size)):
            raise CorruptCacheError(f"{path}: records are not sorted")
    return CollisionTensor(
        hdr["m"],
        KernelSpec(hdr["varpi"], hdr["c_const"], hdr["e"]),
        rec["a"],
        rec["l"],
        rec["k"],
        rec["v"],
        drop_tol=hdr["drop_tol"],
        symmetric=hdr["symmetric"],
        ordering=hdr["ordering"],
    )
