"""Farthest point sampling, point-count fixing, and exemplar downsampling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud
from .errors import InvalidArgumentError

__all__ = [
    "SamplingConfig",
    "fps",
    "fps_select",
    "fix_point_count",
    "downsample_exemplar",
]


@dataclass(frozen=True)
class SamplingConfig:
    """Target count plus seed-point policy for count fixing.

    ``seed_index`` of None means the seed point is drawn uniformly from the
    provided rng; an integer pins it (index 0 everywhere reproducibility
    matters).
    """

    target_count: int = 1024
    seed_index: int | None = 0

    def __post_init__(self):
        if self.target_count < 1:
            raise InvalidArgumentError(f"target_count must be >= 1, got {self.target_count}")


def fps_select(
    points: np.ndarray,
    m: int,
    start_index: int | None = 0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Greedy max-min selection over row vectors of any dimension.

    Returns the sequence of ``m`` distinct row indices. Each step picks the
    unselected row maximizing the minimum squared Euclidean distance to the
    selected set; ties resolve to the lowest index. Distances to the
    selected set are maintained incrementally (one new-point update per
    step), so the full sequence costs O(m * n).
    """
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    if m < 1:
        raise InvalidArgumentError(f"sample count must be >= 1, got {m}")
    if m > n:
        raise InvalidArgumentError(f"cannot sample {m} of {n} points")
    if start_index is None:
        if rng is None:
            raise InvalidArgumentError("random seed-point policy requires an rng")
        start_index = int(rng.integers(n))
    if not 0 <= start_index < n:
        raise InvalidArgumentError(f"start index {start_index} out of range for {n} points")

    selected = np.empty(m, dtype=np.intp)
    selected[0] = start_index
    diff = pts - pts[start_index]
    dists = np.einsum("ij,ij->i", diff, diff)
    dists[start_index] = -1.0  # selected rows never win the argmax
    for i in range(1, m):
        nxt = int(np.argmax(dists))
        selected[i] = nxt
        diff = pts - pts[nxt]
        np.minimum(dists, np.einsum("ij,ij->i", diff, diff), out=dists)
        dists[nxt] = -1.0
    return selected


def fps(
    cloud: PointCloud,
    m: int,
    start_index: int | None = 0,
    rng: np.random.Generator | None = None,
) -> PointCloud:
    """Farthest point sampling of ``m`` points, in selection order."""
    idx = fps_select(cloud.points, m, start_index=start_index, rng=rng)
    return PointCloud(cloud.points[idx])


def fix_point_count(
    cloud: PointCloud,
    n: int = 1024,
    rng: np.random.Generator | None = None,
    seed_index: int | None = 0,
) -> PointCloud:
    """Force the cloud to exactly ``n`` points.

    Oversized clouds are reduced by farthest point sampling; undersized
    ones are padded with copies of their first point.
    """
    if n < 1:
        raise InvalidArgumentError(f"target count must be >= 1, got {n}")
    if cloud.count == n:
        return cloud
    if cloud.count > n:
        return fps(cloud, n, start_index=seed_index, rng=rng)
    pad = np.repeat(cloud.points[:1], n - cloud.count, axis=0)
    return PointCloud(np.concatenate([cloud.points, pad], axis=0))


def downsample_exemplar(cloud: PointCloud, r: float) -> PointCloud:
    """FPS the cloud down by rate ``r`` (keeps floor(count / r) points)."""
    if r <= 1:
        raise InvalidArgumentError(f"downsampling rate must be > 1, got {r}")
    target = math.floor(cloud.count / r)
    if target < 1:
        raise InvalidArgumentError(
            f"rate {r} leaves no points for a {cloud.count}-point cloud"
        )
    return fps(cloud, target, start_index=0)
