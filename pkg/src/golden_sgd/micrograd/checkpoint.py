"""Flat binary checkpoint format.

Layout (all little-endian)::

    b"GSGD"  u32 version  u32 tensor_count
    per tensor:
        u32 name_length  name (utf-8)
        u32 rank  u64 dims[rank]
        f64 data[prod(dims)]   (row-major)

Rank-0 tensors hold scalars such as optimizer hyperparameters.
"""

from __future__ import annotations

import io
import struct

import numpy as np

from ..errors import FormatError, TruncationError

MAGIC = b"GSGD"
VERSION = 1


def dump_tensors(tensors, fh):
    fh.write(MAGIC)
    fh.write(struct.pack("<II", VERSION, len(tensors)))
    for name, arr in tensors.items():
        arr = np.asarray(arr, dtype="<f8")  # tobytes() is row-major; keeps rank 0
        raw = name.encode("utf-8")
        fh.write(struct.pack("<I", len(raw)))
        fh.write(raw)
        fh.write(struct.pack("<I", arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        fh.write(arr.tobytes())


def _read(fh, n):
    buf = fh.read(n)
    if len(buf) != n:
        raise TruncationError(f"expected {n} bytes, got {len(buf)}")
    return buf


def load_tensors(fh):
    if _read(fh, 4) != MAGIC:
        raise FormatError("not a GSGD checkpoint")
    version, count = struct.unpack("<II", _read(fh, 8))
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    out = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<I", _read(fh, 4))
        name = _read(fh, name_len).decode("utf-8")
        (rank,) = struct.unpack("<I", _read(fh, 4))
        dims = struct.unpack(f"<{rank}Q", _read(fh, 8 * rank))
        n = int(np.prod(dims, dtype=np.int64)) if rank else 1
        data = np.frombuffer(_read(fh, 8 * n), dtype="<f8").astype(np.float64)
        out[name] = data.reshape(dims)
    return out


def save_checkpoint(path, tensors):
    with open(path, "wb") as fh:
        dump_tensors(tensors, fh)


def load_checkpoint(path):
    with open(path, "rb") as fh:
        return load_tensors(fh)


def to_bytes(tensors):
    buf = io.BytesIO()
    dump_tensors(tensors, buf)
    return buf.getvalue()


def from_bytes(raw):
    return load_tensors(io.BytesIO(raw))
