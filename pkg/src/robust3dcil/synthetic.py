"""Procedural synthetic dataset generator.

Eight parametric surface shapes stand in for scanned object classes:
sphere, box, cylinder, cone, torus, plane patch, L-bracket, and capped
hemisphere. Each class fixes its shape parameters; each sample gets a
seeded pose jitter (free yaw, small tilt) and per-axis aspect jitter, then
is normalized to the unit ball. Generation is a pure function of
(class specs, seed): every sample derives its own stream from the master
seed keyed by class and sample index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cloud import PointCloud, normalize_unit_ball
from .corruption import rotation_matrix_xyz
from .dataset import DatasetManifest, LabeledSample, ManifestEntry
from .errors import InvalidConfigError
from .rng import derive_rng

__all__ = ["ShapeSpec", "SHAPE_KINDS", "default_shape_specs", "gen_synthetic_dataset"]


def _sphere(n, rng, radius=1.0):
    # antipodal pairs keep the centroid at the origin, so unit-ball
    # normalization preserves the constant radius
    half = (n + 1) // 2
    v = rng.normal(size=(half, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    pts = np.concatenate([v, -v], axis=0)[:n]
    return pts * radius


def _box(n, rng, half_extents=(1.0, 0.7, 0.45)):
    a, b, c = half_extents
    areas = np.array([b * c, a * c, a * b])  # per axis-pair, two faces each
    face_axis = rng.choice(3, size=n, p=areas / areas.sum())
    signs = rng.choice((-1.0, 1.0), size=n)
    uv = rng.uniform(-1.0, 1.0, size=(n, 2))
    pts = np.empty((n, 3))
    ext = np.array(half_extents)
    for axis in range(3):
        mask = face_axis == axis
        others = [i for i in range(3) if i != axis]
        pts[mask, axis] = signs[mask] * ext[axis]
        pts[np.ix_(mask, others)] = uv[mask] * ext[others]
    return pts


def _cylinder(n, rng, radius=0.4, height=1.6):
    lateral = 2 * math.pi * radius * height
    caps = 2 * math.pi * radius**2
    on_side = rng.uniform(size=n) < lateral / (lateral + caps)
    theta = rng.uniform(0.0, 2 * math.pi, size=n)
    pts = np.empty((n, 3))
    z_side = rng.uniform(-height / 2, height / 2, size=n)
    pts[:, 0] = radius * np.cos(theta)
    pts[:, 1] = radius * np.sin(theta)
    pts[:, 2] = z_side
    cap = ~on_side
    rad = radius * np.sqrt(rng.uniform(size=cap.sum()))
    cap_sign = rng.choice((-1.0, 1.0), size=cap.sum())
    pts[cap, 0] = rad * np.cos(theta[cap])
    pts[cap, 1] = rad * np.sin(theta[cap])
    pts[cap, 2] = cap_sign * height / 2
    return pts


def _cone(n, rng, radius=0.7, height=1.4):
    slant = math.sqrt(radius**2 + height**2)
    lateral = math.pi * radius * slant
    base = math.pi * radius**2
    on_side = rng.uniform(size=n) < lateral / (lateral + base)
    theta = rng.uniform(0.0, 2 * math.pi, size=n)
    # area density grows linearly with distance from the apex
    t = np.sqrt(rng.uniform(size=n))
    pts = np.empty((n, 3))
    pts[:, 0] = t * radius * np.cos(theta)
    pts[:, 1] = t * radius * np.sin(theta)
    pts[:, 2] = height * (1.0 - t) - height / 2
    on_base = ~on_side
    rad = radius * np.sqrt(rng.uniform(size=on_base.sum()))
    pts[on_base, 0] = rad * np.cos(theta[on_base])
    pts[on_base, 1] = rad * np.sin(theta[on_base])
    pts[on_base, 2] = -height / 2
    return pts


def _torus(n, rng, major=0.8, minor=0.25):
    pts = np.empty((n, 3))
    filled = 0
    while filled < n:
        want = n - filled
        u = rng.uniform(0.0, 2 * math.pi, size=2 * want)
        v = rng.uniform(0.0, 2 * math.pi, size=2 * want)
        # rejection by the surface-area jacobian (major + minor cos v)
        keep = rng.uniform(size=2 * want) < (major + minor * np.cos(v)) / (major + minor)
        u, v = u[keep][:want], v[keep][:want]
        got = u.shape[0]
        ring = major + minor * np.cos(v)
        pts[filled : filled + got, 0] = ring * np.cos(u)
        pts[filled : filled + got, 1] = ring * np.sin(u)
        pts[filled : filled + got, 2] = minor * np.sin(v)
        filled += got
    return pts


def _plane(n, rng, width=1.6, depth=1.0):
    pts = np.zeros((n, 3))
    pts[:, 0] = rng.uniform(-width / 2, width / 2, size=n)
    pts[:, 1] = rng.uniform(-depth / 2, depth / 2, size=n)
    return pts


def _lbracket(n, rng, length=1.4, height=1.4, width=0.6, thickness=0.35):
    # two slabs joined at a right angle
    slab_a = (length, width, thickness)
    slab_b = (thickness, width, height)
    area = lambda d: 2 * (d[0] * d[1] + d[1] * d[2] + d[0] * d[2])
    in_a = rng.uniform(size=n) < area(slab_a) / (area(slab_a) + area(slab_b))
    pts = np.empty((n, 3))
    na = int(in_a.sum())
    pts[in_a] = _box(na, rng, half_extents=tuple(d / 2 for d in slab_a))
    pts[~in_a] = _box(n - na, rng, half_extents=tuple(d / 2 for d in slab_b))
    pts[in_a, 0] += length / 2 - thickness / 2
    pts[~in_a, 2] += height / 2 - thickness / 2
    return pts


def _hemisphere(n, rng, radius=1.0):
    dome_area = 2 * math.pi * radius**2
    disk_area = math.pi * radius**2
    on_dome = rng.uniform(size=n) < dome_area / (dome_area + disk_area)
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    v[:, 2] = np.abs(v[:, 2])
    pts = v * radius
    disk = ~on_dome
    theta = rng.uniform(0.0, 2 * math.pi, size=disk.sum())
    rad = radius * np.sqrt(rng.uniform(size=disk.sum()))
    pts[disk, 0] = rad * np.cos(theta)
    pts[disk, 1] = rad * np.sin(theta)
    pts[disk, 2] = 0.0
    return pts


_SAMPLERS = {
    "sphere": _sphere,
    "box": _box,
    "cylinder": _cylinder,
    "cone": _cone,
    "torus": _torus,
    "plane": _plane,
    "lbracket": _lbracket,
    "hemisphere": _hemisphere,
}

SHAPE_KINDS = tuple(_SAMPLERS)


@dataclass(frozen=True)
class ShapeSpec:
    """Per-class fixed shape with per-sample jitter magnitudes."""

    kind: str
    name: str
    params: dict = field(default_factory=dict)
    pre_scale: tuple[float, float, float] = (1.0, 1.0, 1.0)
    aspect_jitter: float = 0.12
    tilt_jitter: float = 0.25

    def __post_init__(self):
        if self.kind not in _SAMPLERS:
            raise InvalidConfigError(f"unknown shape kind {self.kind!r}; expected {SHAPE_KINDS}")


# high-contrast fixed parameters per shape kind: classes separate well in
# radial/height profile and covariance signature
_BASE_PARAMS: dict[str, dict] = {
    "sphere": {},
    "plane": dict(width=2.0, depth=1.3),
    "cylinder": dict(radius=0.12, height=2.0),
    "torus": dict(major=0.9, minor=0.1),
    "box": dict(half_extents=(1.0, 1.0, 1.0)),
    "cone": dict(radius=0.35, height=1.9),
    "lbracket": dict(length=1.8, height=1.8, width=0.25, thickness=0.22),
    "hemisphere": {},
}


def default_shape_specs(num_classes: int) -> list[ShapeSpec]:
    """Cycle the 8-shape family; later cycles get a distinct fixed stretch."""
    specs = []
    for k in range(num_classes):
        kind = SHAPE_KINDS[k % len(SHAPE_KINDS)]
        variant = k // len(SHAPE_KINDS)
        name = kind if variant == 0 else f"{kind}-v{variant}"
        pre_scale = (1.0, 1.0, 1.0 + 0.45 * variant)
        # only the pure sphere class keeps a near-constant radius
        aspect = 0.004 if (kind == "sphere" and variant == 0) else 0.04
        specs.append(
            ShapeSpec(
                kind,
                name,
                params=dict(_BASE_PARAMS[kind]),
                pre_scale=pre_scale,
                aspect_jitter=aspect,
                tilt_jitter=0.1,
            )
        )
    return specs


def _generate_sample(spec: ShapeSpec, n_points: int, rng: np.random.Generator) -> PointCloud:
    pts = _SAMPLERS[spec.kind](n_points, rng, **spec.params)
    pts = pts * np.asarray(spec.pre_scale)
    a = spec.aspect_jitter
    pts = pts * rng.uniform(1.0 - a, 1.0 + a, size=3)
    tilt_x, tilt_y = rng.uniform(-spec.tilt_jitter, spec.tilt_jitter, size=2)
    yaw = rng.uniform(-math.pi, math.pi)
    pts = pts @ rotation_matrix_xyz(tilt_x, tilt_y, yaw).T
    return normalize_unit_ball(PointCloud(pts))


def gen_synthetic_dataset(
    num_classes: int,
    per_class: int,
    points_per_cloud: int = 1024,
    seed: int = 0,
    shape_specs: list[ShapeSpec] | None = None,
) -> tuple[DatasetManifest, list[LabeledSample]]:
    """Generate a seed-reproducible synthetic dataset.

    Returns the manifest (with the standard ``clouds/<id>.pcb`` relative
    paths) and the in-memory samples, all clean, all normalized, all with
    exactly ``points_per_cloud`` points.
    """
    if num_classes < 2:
        raise InvalidConfigError(f"need at least 2 classes, got {num_classes}")
    if per_class < 1:
        raise InvalidConfigError(f"need at least 1 sample per class, got {per_class}")
    if shape_specs is None:
        shape_specs = default_shape_specs(num_classes)
    elif len(shape_specs) != num_classes:
        raise InvalidConfigError(
            f"got {len(shape_specs)} shape specs for {num_classes} classes"
        )
    samples = []
    entries = []
    for k, spec in enumerate(shape_specs):
        for i in range(per_class):
            rng = derive_rng(seed, "synthetic", k, i)
            cloud = _generate_sample(spec, points_per_cloud, rng)
            source_id = f"{spec.name}-{i:04d}"
            samples.append(LabeledSample(cloud=cloud, label=k, source_id=source_id))
            entries.append(
                ManifestEntry(
                    class_id=k,
                    class_name=spec.name,
                    source_id=source_id,
                    path=f"clouds/{source_id}.pcb",
                )
            )
    return DatasetManifest(tuple(entries), points_per_cloud), samples
