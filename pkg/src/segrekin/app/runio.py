"""CSV time series and the flat binary field-snapshot format.

Snapshot layout: 8-byte magic ``SEGKFLD1``, u32 version, u32 rank,
u64 dims[rank], u8 dtype tag (f64 = 1), then the row-major little-endian
payload.  CSV floats are written with repr-exact precision so identical
runs produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

MAGIC = b"SEGKFLD1"
VERSION = 1
DTYPE_F64 = 1


def fmt_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def write_csv(path: Path, header: list[str], rows) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt_value(v) for v in row) + "\n")
    return path


def write_field(path: Path, values: np.ndarray) -> Path:
    path = Path(path)
    arr = np.ascontiguousarray(values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        fh.write(struct.pack("<B", DTYPE_F64))
        fh.write(arr.tobytes())
    return path


def read_field(path: Path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise ValueError(f"not a field snapshot: bad magic {magic!r}")
        version, rank = struct.unpack("<II", fh.read(8))
        if version != VERSION:
            raise ValueError(f"unsupported snapshot version {version}")
        dims = struct.unpack(f"<{rank}Q", fh.read(8 * rank))
        (tag,) = struct.unpack("<B", fh.read(1))
        if tag != DTYPE_F64:
            raise ValueError(f"unsupported dtype tag {tag}")
        payload = fh.read()
    return np.frombuffer(payload, dtype="<f8").reshape(dims).copy()


def sha256_of(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
