"""Corruption generators, severity tables, and scenario mixing.

Seven corruption families (scale, rotate, jitter, add-global, add-local,
drop-global, drop-local), each with five severity levels. The standard
scenario applies only level 5. After any corruption the cloud is forced
back to the canonical point count: FPS when it grew, first-point padding
when it shrank, so corrupted clouds are indistinguishable by count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud
from .dataset import CorruptionType, LabeledSample
from .errors import InvalidConfigError, InvalidInputError
from .sampling import fix_point_count

__all__ = [
    "CorruptionSpec",
    "MixPolicy",
    "SEVERITY_LEVELS",
    "LOCAL_CLUSTER_SIGMAS",
    "severity_param",
    "severity_table_text",
    "rotation_matrix_xyz",
    "split_cluster_sizes",
    "corrupt_raw",
    "apply_corruption",
    "corrupt_training_class",
    "expand_test_set",
]

NUM_LEVELS = 5

# Per-type parameter for severity levels 1..5 (index level-1).
SEVERITY_LEVELS: dict[CorruptionType, tuple[float, ...]] = {
    CorruptionType.JITTER: (0.01, 0.02, 0.03, 0.04, 0.05),
    CorruptionType.SCALE: (1.6, 1.7, 1.8, 1.9, 2.0),
    CorruptionType.ROTATE: (
        math.pi / 30,
        math.pi / 15,
        math.pi / 10,
        math.pi / 7.5,
        math.pi / 6,
    ),
    CorruptionType.DROP_GLOBAL: (0.25, 0.375, 0.5, 0.675, 0.75),
    CorruptionType.DROP_LOCAL: (100, 200, 300, 400, 500),
    CorruptionType.ADD_GLOBAL: (10, 20, 30, 40, 50),
    CorruptionType.ADD_LOCAL: (100, 200, 300, 400, 500),
}

# Per-cluster standard deviation choices for add-local.
LOCAL_CLUSTER_SIGMAS = (0.075, 0.1, 0.125)

# Cluster count for the local corruptions is uniform on 1..MAX_CLUSTERS.
MAX_CLUSTERS = 8

_PARAM_SYMBOLS = {
    CorruptionType.JITTER: "sigma",
    CorruptionType.SCALE: "S",
    CorruptionType.ROTATE: "theta",
    CorruptionType.DROP_GLOBAL: "rho",
    CorruptionType.DROP_LOCAL: "K",
    CorruptionType.ADD_GLOBAL: "K",
    CorruptionType.ADD_LOCAL: "K",
}


def severity_param(ctype: CorruptionType, level: int) -> float:
    """Severity parameter for ``ctype`` at 1-based ``level``."""
    if not 1 <= level <= NUM_LEVELS:
        raise InvalidConfigError(f"severity level must be 1..{NUM_LEVELS}, got {level}")
    return SEVERITY_LEVELS[ctype][level - 1]


def severity_table_text() -> str:
    """Audit dump of the severity tables, one row per corruption type."""
    lines = ["type        param   " + "".join(f"level{i}".rjust(10) for i in range(1, 6))]
    for ctype in CorruptionType:
        params = SEVERITY_LEVELS[ctype]
        row = f"{ctype.name.lower():<12}{_PARAM_SYMBOLS[ctype]:<8}"
        row += "".join(f"{p:>10.6g}" for p in params)
        lines.append(row)
    lines.append(f"add_local cluster sigma choices: {', '.join(str(s) for s in LOCAL_CLUSTER_SIGMAS)}")
    lines.append(f"local cluster count: uniform on 1..{MAX_CLUSTERS}")
    return "\n".join(lines)


@dataclass(frozen=True)
class CorruptionSpec:
    """A corruption type at a severity level (experiments default to 5)."""

    type: CorruptionType
    level: int = 5

    def __post_init__(self):
        if not 1 <= self.level <= NUM_LEVELS:
            raise InvalidConfigError(
                f"severity level must be 1..{NUM_LEVELS}, got {self.level}"
            )

    @property
    def param(self) -> float:
        return severity_param(self.type, self.level)


@dataclass(frozen=True)
class MixPolicy:
    """Per-class clean/corrupted mixing for training pools.

    Each class draws its corrupted fraction rho uniformly from
    [rho_min, rho_max]; corrupted samples get one type chosen uniformly
    from the seven, applied at ``level``.
    """

    rho_min: float = 0.5
    rho_max: float = 0.95
    level: int = 5

    def __post_init__(self):
        if not 0.0 <= self.rho_min <= self.rho_max <= 1.0:
            raise InvalidConfigError(
                f"need 0 <= rho_min <= rho_max <= 1, got [{self.rho_min}, {self.rho_max}]"
            )
        if not 1 <= self.level <= NUM_LEVELS:
            raise InvalidConfigError(f"severity level must be 1..{NUM_LEVELS}, got {self.level}")


def rotation_matrix_xyz(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Extrinsic X-then-Y-then-Z rotation: Rz(gamma) @ Ry(beta) @ Rx(alpha)."""
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    cg, sg = math.cos(gamma), math.sin(gamma)
    rx = np.array([[1, 0, 0], [0, ca, -sa], [0, sa, ca]])
    ry = np.array([[cb, 0, sb], [0, 1, 0], [-sb, 0, cb]])
    rz = np.array([[cg, -sg, 0], [sg, cg, 0], [0, 0, 1]])
    return rz @ ry @ rx


def split_cluster_sizes(total: int, clusters: int, rng: np.random.Generator) -> np.ndarray:
    """Split ``total`` into ``clusters`` positive parts, uniform over compositions.

    Draws clusters-1 cut points without replacement from 1..total-1.
    """
    if clusters < 1 or clusters > total:
        raise InvalidInputError(f"cannot split {total} into {clusters} positive parts")
    if clusters == 1:
        return np.array([total], dtype=np.intp)
    cuts = np.sort(rng.choice(np.arange(1, total), size=clusters - 1, replace=False))
    return np.diff(np.concatenate(([0], cuts, [total]))).astype(np.intp)


def _uniform_ball(k: int, rng: np.random.Generator) -> np.ndarray:
    """k points uniform by volume in the closed unit ball."""
    v = rng.normal(size=(k, 3))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    directions = v / np.maximum(norms, 1e-300)
    radii = rng.uniform(0.0, 1.0, size=(k, 1)) ** (1.0 / 3.0)
    return directions * radii


def _jitter(pts: np.ndarray, sigma: float, rng) -> np.ndarray:
    return pts + rng.normal(0.0, sigma, size=pts.shape)


def _scale(pts: np.ndarray, s: float, rng) -> np.ndarray:
    factors = rng.uniform(1.0 / s, s, size=3)
    return pts * factors


def _rotate(pts: np.ndarray, theta: float, rng) -> np.ndarray:
    alpha, beta, gamma = rng.uniform(-theta, theta, size=3)
    return pts @ rotation_matrix_xyz(alpha, beta, gamma).T


def _drop_global(pts: np.ndarray, rho: float, rng) -> np.ndarray:
    n = pts.shape[0]
    dropped = math.floor(n * rho)
    if dropped >= n:
        raise InvalidInputError(f"drop fraction {rho} removes all {n} points")
    perm = rng.permutation(n)
    return pts[perm[: n - dropped]]


def _drop_local(pts: np.ndarray, k: int, rng) -> np.ndarray:
    n = pts.shape[0]
    k = int(k)
    if k >= n:
        raise InvalidInputError(f"cannot drop {k} of {n} points")
    clusters = int(rng.integers(1, MAX_CLUSTERS + 1))
    sizes = split_cluster_sizes(k, clusters, rng)
    centers = rng.choice(n, size=clusters, replace=False)
    removed = np.zeros(n, dtype=bool)
    for center, size in zip(centers, sizes):
        diff = pts - pts[center]
        order = np.argsort(np.einsum("ij,ij->i", diff, diff), kind="stable")
        # nearest not-yet-removed neighbors; skipping extends the neighborhood
        take = order[~removed[order]][:size]
        removed[take] = True
    return pts[~removed]


def _add_global(pts: np.ndarray, k: int, rng) -> np.ndarray:
    return np.concatenate([pts, _uniform_ball(int(k), rng)], axis=0)


def _add_local(pts: np.ndarray, k: int, rng) -> np.ndarray:
    n = pts.shape[0]
    clusters = int(rng.integers(1, MAX_CLUSTERS + 1))
    sizes = split_cluster_sizes(int(k), clusters, rng)
    centers = rng.choice(n, size=clusters, replace=False)
    added = []
    for center, size in zip(centers, sizes):
        sigma = float(rng.choice(LOCAL_CLUSTER_SIGMAS))
        added.append(rng.normal(loc=pts[center], scale=sigma, size=(size, 3)))
    return np.concatenate([pts] + added, axis=0)


_GENERATORS = {
    CorruptionType.JITTER: _jitter,
    CorruptionType.SCALE: _scale,
    CorruptionType.ROTATE: _rotate,
    CorruptionType.DROP_GLOBAL: _drop_global,
    CorruptionType.DROP_LOCAL: _drop_local,
    CorruptionType.ADD_GLOBAL: _add_global,
    CorruptionType.ADD_LOCAL: _add_local,
}


def corrupt_raw(spec: CorruptionSpec, cloud: PointCloud, rng: np.random.Generator) -> PointCloud:
    """Apply the corruption without restoring the canonical point count."""
    return PointCloud(_GENERATORS[spec.type](cloud.points, spec.param, rng))


def apply_corruption(
    spec: CorruptionSpec,
    cloud: PointCloud,
    rng: np.random.Generator,
    target_count: int | None = None,
) -> PointCloud:
    """Corrupt the cloud, then force it back to ``target_count`` points.

    ``target_count`` defaults to the input count, so count-preserving
    corruptions pass through untouched and add/drop corruptions are FPSed
    down or first-point padded back.
    """
    target = cloud.count if target_count is None else target_count
    return fix_point_count(corrupt_raw(spec, cloud, rng), target)


def _require_clean_single_class(samples: list[LabeledSample]) -> None:
    if not samples:
        raise InvalidInputError("sample list is empty")
    labels = {s.label for s in samples}
    if len(labels) != 1:
        raise InvalidInputError(f"samples span multiple classes: {sorted(labels)}")
    if any(s.corruption is not None for s in samples):
        raise InvalidInputError("input samples must all be clean")


def corrupt_training_class(
    samples: list[LabeledSample],
    policy: MixPolicy,
    rng: np.random.Generator,
) -> list[LabeledSample]:
    """Mix a clean class into the training pool: corrupt a drawn fraction.

    The class's corrupted fraction rho is drawn once, round-half-even of
    rho * m samples are chosen uniformly without replacement, and each gets
    one corruption type drawn uniformly from the seven. Geometry for each
    corrupted sample comes from its own spawned child stream. Output order
    matches input order; tags record what happened but nothing downstream
    of reporting may read them.
    """
    _require_clean_single_class(samples)
    m = len(samples)
    rho = float(rng.uniform(policy.rho_min, policy.rho_max))
    n_corrupt = int(round(rho * m))
    if n_corrupt == 0:
        return list(samples)
    chosen = rng.choice(m, size=n_corrupt, replace=False)
    type_codes = rng.integers(1, 8, size=n_corrupt)
    children = rng.spawn(n_corrupt)
    out = list(samples)
    for idx, code, child in zip(chosen, type_codes, children):
        spec = CorruptionSpec(CorruptionType(int(code)), policy.level)
        sample = samples[int(idx)]
        corrupted = apply_corruption(spec, sample.cloud, child)
        out[int(idx)] = sample.with_cloud(corrupted, spec.type)
    return out


def expand_test_set(
    samples: list[LabeledSample],
    level: int = 5,
    rng: np.random.Generator | None = None,
) -> list[LabeledSample]:
    """Expand clean test samples 8x: the original plus one per corruption type.

    Output groups follow input order; within a group the clean sample comes
    first, then the seven corrupted versions in type-code order.
    """
    if rng is None:
        raise InvalidInputError("expand_test_set requires an rng")
    if any(s.corruption is not None for s in samples):
        raise InvalidInputError("input samples must all be clean")
    out = []
    for sample in samples:
        out.append(sample)
        children = rng.spawn(len(CorruptionType))
        for ctype, child in zip(CorruptionType, children):
            spec = CorruptionSpec(ctype, level)
            corrupted = apply_corruption(spec, sample.cloud, child)
            out.append(sample.with_cloud(corrupted, ctype))
    return out
