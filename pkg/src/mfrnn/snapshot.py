"""MFW1 binary weight snapshots.

Layout (little-endian)::

    b"MFW1"  u16 version  u32 n  u32 d  u32 L  f64 R  f64 t
    f64[n*d] W_xh   f64[n*n] W_hh   f64[n] W_hy      (row-major)
"""
from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .model import NetConfig, WeightSet

MAGIC = b"MFW1"
VERSION = 1
_HEADER = struct.Struct("<4sHIIIdd")


def to_bytes(w: WeightSet) -> bytes:
    c = w.config
    head = _HEADER.pack(MAGIC, VERSION, c.n, c.d, c.L, c.R, w.t)
    body = [np.ascontiguousarray(a, dtype="<f8").tobytes() for a in (w.W_xh, w.W_hh, w.W_hy)]
    return head + b"".join(body)


def from_bytes(buf: bytes, activation: str = "tanh") -> WeightSet:
    if len(buf) < _HEADER.size:
        raise ConfigError("truncated MFW1 header")
    magic, version, n, d, L, R, t = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise ConfigError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise ConfigError(f"unsupported MFW1 version {version}")
    sizes = (n * d, n * n, n)
    if len(buf) != _HEADER.size + 8 * sum(sizes):
        raise ConfigError("MFW1 payload size does not match header")
    off = _HEADER.size
    arrays = []
    for size in sizes:
        arrays.append(np.frombuffer(buf, dtype="<f8", count=size, offset=off).astype(np.float64))
        off += 8 * size
    cfg = NetConfig(n=n, d=d, L=L, R=R, activation=activation)
    return WeightSet(arrays[0].reshape(n, d), arrays[1].reshape(n, n), arrays[2], cfg, t)


def save(w: WeightSet, path) -> Path:
    """Write ``w`` atomically (temp file + rename)."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(to_bytes(w))
    os.replace(tmp, path)
    return path


def load(path, activation: str = "tanh") -> WeightSet:
    return from_bytes(Path(path).read_bytes(), activation=activation)
