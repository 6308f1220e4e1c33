"""Sampled SDF point files

    u64 count | count × (x, y, z, sdf) float32      (little-endian)
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from src.core.errors import ImageFormatError

HEADER = struct.Struct("<Q")
RECORD_DTYPE = np.dtype("<f4")


def load_points(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Returns (points N×3, sdf N) as float64"""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise ImageFormatError(f"cannot read point file {path}: {e}") from e
    if len(data) < HEADER.size:
        raise ImageFormatError(f"point file {path} has no header")

    (count,) = HEADER.unpack_from(data, 0)
    expected = count * 4 * RECORD_DTYPE.itemsize
    payload = data[HEADER.size :]
    if len(payload) != expected:
        raise ImageFormatError(f"point file {path}: header says {count} records, payload has {len(payload)} bytes")

    records = np.frombuffer(payload, dtype=RECORD_DTYPE).reshape(count, 4).astype(np.float64)
    if not np.all(np.isfinite(records)):
        raise ImageFormatError(f"point file {path} contains non-finite values")
    return records[:, :3], records[:, 3]


def save_points(path: str | Path, points: np.ndarray, sdf: np.ndarray) -> Path:
    points = np.asarray(points)
    sdf = np.asarray(sdf).reshape(-1)
    if points.ndim != 2 or points.shape[1] != 3 or points.shape[0] != sdf.shape[0]:
        raise ImageFormatError("point records need N×3 points and N distances")
    records = np.concatenate([points, sdf[:, None]], axis=1).astype(RECORD_DTYPE)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(HEADER.pack(records.shape[0]) + records.tobytes())
    return path
