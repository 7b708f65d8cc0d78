"""Grid dumps shared by KvN waves and propagator kernels.

Binary layout (all little-endian)::

    8s   magic  b"KVNGRID\\0"
    u32  version (1)
    u32  n0, u32 n1          array dimensions, row-major
    u32  meta_len            bytes of UTF-8 JSON metadata that follow the header
    4f64 axis0_lo, axis0_hi, axis1_lo, axis1_hi   half-open sample ranges
    meta_len bytes           JSON metadata (sorted keys)
    n0*n1 pairs of f64       (re, im) per sample
"""

from __future__ import annotations

import csv
import io
import json
import struct
from pathlib import Path

import numpy as np

__all__ = ["encode_grid", "grid_csv", "read_grid", "write_grid"]

MAGIC = b"KVNGRID\0"
VERSION = 1
_HEADER = struct.Struct("<8sIIII4d")


def encode_grid(values: np.ndarray, ranges, metadata: dict | None = None) -> bytes:
    values = np.asarray(values, dtype="<c16")
    if values.ndim != 2:
        raise ValueError("grid dumps hold two-dimensional arrays")
    (a_lo, a_hi), (b_lo, b_hi) = ranges
    meta = json.dumps(metadata or {}, sort_keys=True).encode("utf-8")
    head = _HEADER.pack(MAGIC, VERSION, values.shape[0], values.shape[1], len(meta), a_lo, a_hi, b_lo, b_hi)
    return head + meta + np.ascontiguousarray(values).tobytes()


def write_grid(path, values: np.ndarray, ranges, metadata: dict | None = None) -> None:
    Path(path).write_bytes(encode_grid(values, ranges, metadata))


def read_grid(path):
    """Return ``(values, ranges, metadata)``."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: file too short for a grid header")
    magic, version, n0, n1, meta_len, a_lo, a_hi, b_lo, b_hi = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a grid dump (bad magic)")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported grid format version {version}")
    start = _HEADER.size
    meta = json.loads(raw[start : start + meta_len].decode("utf-8"))
    body = raw[start + meta_len :]
    if len(body) != 16 * n0 * n1:
        raise ValueError(f"{path}: expected {n0 * n1} complex samples, found {len(body) // 16}")
    values = np.frombuffer(body, dtype="<c16").reshape(n0, n1).copy()
    return values, ((a_lo, a_hi), (b_lo, b_hi)), meta


def grid_csv(q: np.ndarray, p: np.ndarray, values: np.ndarray, comment: str | None = None) -> str:
    """Rows ``q, p, re, im, abs2`` in row-major order."""
    buf = io.StringIO()
    if comment:
        for line in comment.splitlines():
            buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["q", "p", "re_psi", "im_psi", "abs2"])
    for i, qi in enumerate(q):
        for j, pj in enumerate(p):
            v = values[i, j]
            w.writerow([repr(float(qi)), repr(float(pj)), repr(float(v.real)), repr(float(v.imag)), repr(float(v.real**2 + v.imag**2))])
    return buf.getvalue()
