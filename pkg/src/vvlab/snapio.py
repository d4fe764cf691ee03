"""Binary snapshot format and the CSV index.

Snapshot files are little-endian: magic "VVL1", u32 nx, u32 ny,
f64 time, f64 epsilon, then rho, m_x, m_y as f64 interior planes in
row-major order (x index slowest). Defect files reuse the layout with
three extra planes R11, R12, R22 after the barycenter fields; their
epsilon slot carries the member count N used (documented quirk).
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .errors import VvlabError

MAGIC = b"VVL1"
_HEADER = struct.Struct("<4sIIdd")


class SnapshotFormatError(VvlabError):
    pass


def _write(path, nx, ny, time, epsilon, planes):
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, nx, ny, float(time), float(epsilon)))
        for plane in planes:
            arr = np.ascontiguousarray(plane, dtype="<f8")
            if arr.shape != (nx, ny):
                raise SnapshotFormatError(f"plane shape {arr.shape} != ({nx}, {ny})")
            fh.write(arr.tobytes())


def _read(path, n_planes):
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise SnapshotFormatError(f"{path}: truncated header")
        magic, nx, ny, time, epsilon = _HEADER.unpack(head)
        if magic != MAGIC:
            raise SnapshotFormatError(f"{path}: bad magic {magic!r}")
        planes = []
        count = nx * ny
        for _ in range(n_planes):
            buf = fh.read(8 * count)
            if len(buf) != 8 * count:
                raise SnapshotFormatError(f"{path}: truncated plane data")
            planes.append(np.frombuffer(buf, dtype="<f8").reshape(nx, ny).copy())
        if fh.read(1):
            raise SnapshotFormatError(f"{path}: trailing bytes")
    return nx, ny, time, epsilon, planes


def write_snapshot(path, rho, mx, my, time: float, epsilon: float) -> None:
    """Write one state snapshot (interior (nx, ny) planes)."""
    nx, ny = np.asarray(rho).shape
    _write(path, nx, ny, time, epsilon, (rho, mx, my))


def read_snapshot(path):
    """Returns (nx, ny, time, epsilon, rho, mx, my)."""
    nx, ny, time, epsilon, planes = _read(path, 3)
    return nx, ny, time, epsilon, planes[0], planes[1], planes[2]


def write_defect_snapshot(path, rho, mx, my, r11, r12, r22,
                          time: float, n_used: int) -> None:
    nx, ny = np.asarray(rho).shape
    _write(path, nx, ny, time, float(n_used), (rho, mx, my, r11, r12, r22))


def read_defect_snapshot(path):
    """Returns (nx, ny, time, n_used, rho, mx, my, r11, r12, r22)."""
    nx, ny, time, n_used, planes = _read(path, 6)
    return (nx, ny, time, int(n_used), *planes)


def probe_snapshot(path) -> bool:
    """Cheap integrity check used by idempotent reruns."""
    try:
        p = Path(path)
        if not p.is_file():
            return False
        with open(p, "rb") as fh:
            head = fh.read(_HEADER.size)
            if len(head) != _HEADER.size:
                return False
            magic, nx, ny, _, _ = _HEADER.unpack(head)
            if magic != MAGIC:
                return False
            expect = _HEADER.size + 3 * 8 * nx * ny
        return p.stat().st_size == expect
    except OSError:
        return False


def write_index(path, rows) -> None:
    """Index CSV with columns (member, epsilon, time, path)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["member", "epsilon", "time", "path"])
        for member, epsilon, time, rel in rows:
            writer.writerow([member, f"{epsilon:.17g}", f"{time:.17g}", rel])


def read_index(path):
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["member", "epsilon", "time", "path"]:
            raise SnapshotFormatError(f"{path}: unexpected index header {header}")
        for member, epsilon, time, rel in reader:
            rows.append((int(member), float(epsilon), float(time), rel))
    return rows
