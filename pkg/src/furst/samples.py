"""Point-sample files.

Binary layout: 8-byte magic ``FURSTPTS``, little-endian uint64 count, then
``count`` little-endian float64 chart coordinates. A one-column CSV with a
``theta`` header is accepted as well, for small runs.
"""

from __future__ import annotations

import csv
import os
import struct
from pathlib import Path

import numpy as np

MAGIC = b"FURSTPTS"
_HEADER = struct.Struct("<8sQ")


def write_points(path, points) -> None:
    pts = np.ascontiguousarray(points, dtype="<f8")
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, pts.size))
        fh.write(pts.tobytes())
    os.replace(tmp, path)


def read_points(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, count = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    body = raw[_HEADER.size :]
    if len(body) != 8 * count:
        raise ValueError(f"{path}: header says {count} points, body holds {len(body) / 8:g}")
    return np.frombuffer(body, dtype="<f8").astype(float)


def write_points_csv(path, points) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta"])
        w.writerows([repr(float(t))] for t in points)


def read_points_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["theta"]:
        raise ValueError(f"{path}: expected a 'theta' header")
    return np.array([float(r[0]) for r in rows[1:]], dtype=float)
