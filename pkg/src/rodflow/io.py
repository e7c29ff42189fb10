"""Flat-binary field snapshots, CSV tables and JSON run manifests.

Snapshot layout (little-endian): uint32 leading grid size N, a 32-byte
NUL-padded UTF-8 field name, float64 time stamp, then the row-major float64
nodal values.  The payload shape is recovered as (N, N, -1) with trailing
singleton axes squeezed, which covers scalars (n, n), velocities (n, n, 2)
and kinetic distributions (n, n, nphi) alike.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

__all__ = [
    "write_snapshot",
    "read_snapshot",
    "write_csv",
    "read_csv",
    "write_manifest",
    "read_manifest",
]

_NAME_BYTES = 32
_HEADER = struct.Struct("<I32sd")


def write_snapshot(path, name: str, time: float, data) -> None:
    data = np.ascontiguousarray(data, dtype="<f8")
    if data.ndim < 2 or data.shape[0] != data.shape[1]:
        raise ValueError("snapshot data must have leading (N, N) axes")
    raw = name.encode("utf-8")
    if len(raw) > _NAME_BYTES:
        raise ValueError(f"field name longer than {_NAME_BYTES} bytes")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(data.shape[0], raw.ljust(_NAME_BYTES, b"\0"), time))
        fh.write(data.tobytes())


def read_snapshot(path):
    """Returns (name, time, array); trailing singleton axes are squeezed."""
    with open(path, "rb") as fh:
        n, raw, time = _HEADER.unpack(fh.read(_HEADER.size))
        flat = np.frombuffer(fh.read(), dtype="<f8")
    if flat.size % (n * n):
        raise ValueError(f"corrupt snapshot {path}: payload not divisible by N^2")
    data = flat.reshape(n, n, -1)
    if data.shape[-1] == 1:
        data = data[..., 0]
    return raw.rstrip(b"\0").decode("utf-8"), time, data


def write_csv(path, header, rows) -> None:
    """Deterministic CSV: floats rendered with repr (full precision)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and obj != obj:  # NaN
        return "nan"
    return obj


def write_manifest(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text())
