"""Feature extraction and feature-space helpers.

The built-in extractor is a deterministic 28-dimensional geometric
descriptor so the full pipeline runs without any learned network:

* 3 covariance eigenvalues, descending (shape anisotropy)
* 16-bin normalized histogram of centroid-relative radii
* 8-bin normalized histogram of z coordinates
* mean nearest-neighbor distance

Everything is centroid-relative or distance-based, so features are
translation invariant but deliberately not rotation invariant (the z
histogram moves under rotation, which is what lets corrupted clouds
scatter in feature space). Any object with ``dim`` and ``extract`` can be
plugged in instead; externally computed features travel via the cache file
format below.
"""

from __future__ import annotations

from pathlib import Path
from typing import Protocol

import numpy as np

from .cloud import PointCloud
from .errors import InvalidInputError, ParseError

__all__ = [
    "FeatureExtractor",
    "GeometricFeatureExtractor",
    "GEOMETRIC_FEATURE_DIM",
    "extract_geometric",
    "feature_distance",
    "class_mean",
    "write_feature_cache",
    "read_feature_cache",
]

RADIAL_BINS = 16
Z_BINS = 8
GEOMETRIC_FEATURE_DIM = 3 + RADIAL_BINS + Z_BINS + 1

FEATURE_HEADER_PREFIX = "#robust3dcil-features v1 dim="


class FeatureExtractor(Protocol):
    """Pure, deterministic cloud-to-vector map of fixed dimension."""

    dim: int

    def extract(self, cloud: PointCloud) -> np.ndarray: ...


def _normalized_histogram(values: np.ndarray, bins: int, lo: float, hi: float) -> np.ndarray:
    """Histogram normalized to sum 1; a zero-width range puts all mass in bin 0."""
    out = np.zeros(bins)
    if hi <= lo:
        out[0] = 1.0
        return out
    counts, _ = np.histogram(values, bins=bins, range=(lo, hi))
    return counts / values.shape[0]


def _mean_nn_distance(pts: np.ndarray) -> float:
    # exact O(n^2) via the Gram matrix, minimized in place row by row
    sq = np.einsum("ij,ij->i", pts, pts)
    gram = pts @ pts.T
    gram *= -2.0
    gram += sq[None, :]
    np.fill_diagonal(gram, np.inf)
    d2 = gram.min(axis=1) + sq
    np.maximum(d2, 0.0, out=d2)
    return float(np.sqrt(d2).mean())


def extract_geometric(cloud: PointCloud) -> np.ndarray:
    """28-dimensional geometric descriptor of the cloud."""
    if cloud.count < 4:
        raise InvalidInputError(f"need at least 4 points to extract features, got {cloud.count}")
    pts = cloud.points
    centered = pts - pts.mean(axis=0)

    cov = centered.T @ centered / pts.shape[0]
    eigenvalues = np.linalg.eigvalsh(cov)[::-1]
    eigenvalues = np.maximum(eigenvalues, 0.0)

    radii = np.sqrt(np.einsum("ij,ij->i", centered, centered))
    r_max = float(radii.max())
    if r_max <= 1e-12 * max(1.0, float(np.abs(pts).max())):
        r_max = 0.0  # centroid-arithmetic dust, not spread
    radial_hist = _normalized_histogram(radii, RADIAL_BINS, 0.0, r_max)

    z = pts[:, 2]
    z_hist = _normalized_histogram(z, Z_BINS, float(z.min()), float(z.max()))

    return np.concatenate([eigenvalues, radial_hist, z_hist, [_mean_nn_distance(pts)]])


class GeometricFeatureExtractor:
    """Default extractor wrapping :func:`extract_geometric`."""

    dim = GEOMETRIC_FEATURE_DIM

    def extract(self, cloud: PointCloud) -> np.ndarray:
        return extract_geometric(cloud)


def feature_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean distance between two feature vectors of equal dimension."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidInputError(f"feature dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def class_mean(features: list[np.ndarray] | np.ndarray) -> np.ndarray:
    """Component-wise arithmetic mean of a non-empty feature collection."""
    stack = np.asarray(features, dtype=np.float64)
    if stack.size == 0:
        raise InvalidInputError("cannot take the mean of an empty feature list")
    if stack.ndim != 2:
        raise InvalidInputError(f"features must share one dimension, got shape {stack.shape}")
    return stack.mean(axis=0)


def write_feature_cache(
    path: str | Path,
    records: list[tuple[str, int, np.ndarray]],
    dim: int,
) -> None:
    """Write (source_id, corruption_code, vector) records to a cache file."""
    lines = [f"{FEATURE_HEADER_PREFIX}{dim}"]
    for source_id, code, vec in records:
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (dim,):
            raise InvalidInputError(f"{source_id}: expected dim {dim}, got {vec.shape}")
        values = " ".join(f"{v:.9g}" for v in vec)
        lines.append(f"{source_id}\t{code}\t{values}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_feature_cache(path: str | Path) -> tuple[int, list[tuple[str, int, np.ndarray]]]:
    """Read a feature cache; returns (dim, records)."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or not lines[0].startswith(FEATURE_HEADER_PREFIX):
        raise ParseError(f"missing header {FEATURE_HEADER_PREFIX!r}<d>", path=path, line=1)
    try:
        dim = int(lines[0][len(FEATURE_HEADER_PREFIX):])
    except ValueError:
        raise ParseError("unparseable dimension in header", path=path, line=1)
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise ParseError(
                f"expected 3 tab-separated fields, got {len(fields)}", path=path, line=lineno
            )
        try:
            code = int(fields[1])
            vec = np.array([float(v) for v in fields[2].split()], dtype=np.float64)
        except ValueError:
            raise ParseError("unparseable numeric field", path=path, line=lineno)
        if vec.shape != (dim,):
            raise ParseError(
                f"expected {dim} feature values, got {vec.shape[0]}", path=path, line=lineno
            )
        if not np.all(np.isfinite(vec)):
            raise ParseError("non-finite feature value", path=path, line=lineno)
        records.append((fields[0], code, vec))
    return dim, records
