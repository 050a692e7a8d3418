"""Point-cloud value type and unit-ball normalization."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

__all__ = ["PointCloud", "normalize_unit_ball"]


@dataclass(frozen=True)
class PointCloud:
    """Ordered set of 3D points, immutable after construction.

    ``points`` is an (n, 3) float64 array; point order is significant
    (shuffle-and-drop corruption and padding both depend on it).
    """

    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise InvalidInputError(f"expected (n, 3) point array, got shape {pts.shape}")
        if pts.shape[0] < 1:
            raise InvalidInputError("point cloud must contain at least one point")
        if not np.all(np.isfinite(pts)):
            raise InvalidInputError("point coordinates must be finite")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def count(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.count

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointCloud):
            return NotImplemented
        return self.points.shape == other.points.shape and bool(
            np.all(self.points == other.points)
        )

    def __hash__(self):
        return hash((self.points.shape[0], self.points.tobytes()))


def normalize_unit_ball(cloud: PointCloud) -> PointCloud:
    """Center the cloud on its centroid and scale the farthest point to norm 1.

    A zero-spread cloud (all points identical) maps to all zeros. Point
    order is preserved; the map is idempotent up to float rounding.
    """
    pts = cloud.points
    centered = pts - pts.mean(axis=0)
    max_norm = float(np.sqrt((centered * centered).sum(axis=1).max()))
    # a spread at float rounding level is centroid-arithmetic dust, not shape
    scale = float(np.abs(pts).max())
    if max_norm <= scale * 1e-12:
        return PointCloud(np.zeros_like(pts))
    return PointCloud(centered / max_norm)
