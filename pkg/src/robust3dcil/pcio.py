"""Point-cloud file formats.

Two formats are supported:

* ``xyz`` — one point per line, three decimal reals separated by single
  spaces, LF line endings, no header. Lossy at the 1e-9 level.
* ``pcb`` — magic ``PCB1``, point count as uint32 little-endian, then
  count x 3 IEEE-754 float32 little-endian values (x, y, z interleaved).
  Lossless at float32 precision; this is the storage format used by replay
  buffers so stored point counts map linearly to bytes (12 per point).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .cloud import PointCloud
from .errors import InvalidArgumentError, ParseError

__all__ = ["load_cloud", "save_cloud", "FORMATS"]

PCB_MAGIC = b"PCB1"
PCB_HEADER = struct.Struct("<4sI")
FORMATS = ("xyz", "pcb")


def save_cloud(cloud: PointCloud, path: str | Path, format: str = "pcb") -> None:
    """Write ``cloud`` to ``path`` in the given format."""
    path = Path(path)
    if format == "xyz":
        lines = [f"{x:.9f} {y:.9f} {z:.9f}" for x, y, z in cloud.points]
        path.write_text("\n".join(lines) + "\n")
    elif format == "pcb":
        payload = cloud.points.astype("<f4").tobytes()
        path.write_bytes(PCB_HEADER.pack(PCB_MAGIC, cloud.count) + payload)
    else:
        raise InvalidArgumentError(f"unknown cloud format {format!r}; expected one of {FORMATS}")


def load_cloud(path: str | Path, format: str | None = None) -> PointCloud:
    """Read a point cloud; format defaults from the file suffix."""
    path = Path(path)
    if format is None:
        format = path.suffix.lstrip(".").lower() or "pcb"
    if format == "xyz":
        return _load_xyz(path)
    if format == "pcb":
        return _load_pcb(path)
    raise InvalidArgumentError(f"unknown cloud format {format!r}; expected one of {FORMATS}")


def _load_xyz(path: Path) -> PointCloud:
    rows = []
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 3:
                raise ParseError(
                    f"expected 3 coordinates, got {len(fields)}", path=path, line=lineno
                )
            try:
                x, y, z = (float(f) for f in fields)
            except ValueError:
                raise ParseError(f"unparseable coordinate in {fields!r}", path=path, line=lineno)
            if not all(np.isfinite(v) for v in (x, y, z)):
                raise ParseError("non-finite coordinate", path=path, line=lineno)
            rows.append((x, y, z))
    if not rows:
        raise ParseError("file contains no points", path=path, line=1)
    return PointCloud(np.array(rows, dtype=np.float64))


def _load_pcb(path: Path) -> PointCloud:
    blob = path.read_bytes()
    if len(blob) < PCB_HEADER.size:
        raise ParseError("truncated header", path=path, offset=len(blob))
    magic, count = PCB_HEADER.unpack_from(blob)
    if magic != PCB_MAGIC:
        raise ParseError(f"bad magic {magic!r}, expected {PCB_MAGIC!r}", path=path, offset=0)
    if count < 1:
        raise ParseError("declared point count must be >= 1", path=path, offset=4)
    expected = PCB_HEADER.size + count * 12
    if len(blob) < expected:
        # first offset at which a whole point record is missing
        complete = (len(blob) - PCB_HEADER.size) // 12
        raise ParseError(
            f"payload truncated: {count} points declared, {complete} complete records",
            path=path,
            offset=PCB_HEADER.size + complete * 12,
        )
    if len(blob) > expected:
        raise ParseError("trailing bytes after payload", path=path, offset=expected)
    pts = np.frombuffer(blob, dtype="<f4", count=count * 3, offset=PCB_HEADER.size)
    pts = pts.reshape(count, 3).astype(np.float64)
    bad = ~np.isfinite(pts)
    if bad.any():
        idx = int(np.argwhere(bad.any(axis=1))[0][0])
        raise ParseError(
            f"non-finite coordinate in point {idx}", path=path, offset=PCB_HEADER.size + idx * 12
        )
    return PointCloud(pts)
