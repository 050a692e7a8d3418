"""Labeled samples, dataset manifests, and on-disk dataset layout.

A dataset directory holds one cloud file per sample under ``clouds/`` plus a
``manifest.txt`` index. Manifest format: header line
``#robust3dcil-manifest v1 points=<n>`` then one tab-separated record per
sample: ``<class_id>\t<class_name>\t<source_id>\t<relative_path>`` with an
optional fifth column carrying the corruption code (0 = clean, 1..7).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import IntEnum
from pathlib import Path

from .cloud import PointCloud
from .errors import InvalidInputError, ParseError
from .pcio import load_cloud, save_cloud

__all__ = [
    "CorruptionType",
    "LabeledSample",
    "ManifestEntry",
    "DatasetManifest",
    "read_manifest",
    "write_manifest",
    "load_dataset",
    "save_dataset",
]

MANIFEST_HEADER_PREFIX = "#robust3dcil-manifest v1 points="


class CorruptionType(IntEnum):
    """The seven corruption families, with stable serialization codes."""

    SCALE = 1
    ROTATE = 2
    JITTER = 3
    ADD_GLOBAL = 4
    ADD_LOCAL = 5
    DROP_GLOBAL = 6
    DROP_LOCAL = 7

    @property
    def short_name(self) -> str:
        return _SHORT_NAMES[self]

    @classmethod
    def from_code(cls, code: int) -> "CorruptionType | None":
        """Map a serialized code to a type; 0 means clean (None)."""
        if code == 0:
            return None
        return cls(code)


_SHORT_NAMES = {
    CorruptionType.SCALE: "S",
    CorruptionType.ROTATE: "R",
    CorruptionType.JITTER: "J",
    CorruptionType.ADD_GLOBAL: "AG",
    CorruptionType.ADD_LOCAL: "AL",
    CorruptionType.DROP_GLOBAL: "DG",
    CorruptionType.DROP_LOCAL: "DL",
}


def tag_code(corruption: CorruptionType | None) -> int:
    return 0 if corruption is None else int(corruption)


def tag_name(corruption: CorruptionType | None) -> str:
    return "clean" if corruption is None else corruption.short_name


@dataclass(frozen=True)
class LabeledSample:
    """A point cloud with its class label and reporting-only corruption tag.

    The tag is metadata: nothing on the training or selection path may
    branch on it; only evaluation reporting reads it.
    """

    cloud: PointCloud
    label: int
    source_id: str
    corruption: CorruptionType | None = None

    def __post_init__(self):
        if self.label < 0:
            raise InvalidInputError(f"class label must be non-negative, got {self.label}")

    def with_cloud(self, cloud: PointCloud, corruption: CorruptionType | None) -> "LabeledSample":
        return replace(self, cloud=cloud, corruption=corruption)


@dataclass(frozen=True)
class ManifestEntry:
    class_id: int
    class_name: str
    source_id: str
    path: str
    corruption_code: int = 0


@dataclass(frozen=True)
class DatasetManifest:
    """Index of a dataset: per-sample records plus the canonical point count."""

    entries: tuple[ManifestEntry, ...]
    point_count: int = 1024
    root: Path | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        ids = sorted({e.class_id for e in self.entries})
        if ids != list(range(len(ids))):
            raise InvalidInputError(f"class ids must be contiguous from 0, got {ids}")
        source_ids = [e.source_id for e in self.entries]
        if len(set(source_ids)) != len(source_ids):
            raise InvalidInputError("source_ids must be unique across the manifest")
        names = {}
        for e in self.entries:
            if names.setdefault(e.class_id, e.class_name) != e.class_name:
                raise InvalidInputError(f"conflicting names for class {e.class_id}")

    @property
    def num_classes(self) -> int:
        return len({e.class_id for e in self.entries})

    def class_names(self) -> list[str]:
        names = {e.class_id: e.class_name for e in self.entries}
        return [names[i] for i in range(len(names))]

    def classes(self) -> list[tuple[int, str, list[str]]]:
        by_class: dict[int, list[str]] = {i: [] for i in range(self.num_classes)}
        for e in self.entries:
            by_class[e.class_id].append(e.source_id)
        names = self.class_names()
        return [(i, names[i], by_class[i]) for i in range(self.num_classes)]


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    path = Path(path)
    has_tags = any(e.corruption_code != 0 for e in manifest.entries)
    lines = [f"{MANIFEST_HEADER_PREFIX}{manifest.point_count}"]
    for e in manifest.entries:
        fields = [str(e.class_id), e.class_name, e.source_id, e.path]
        if has_tags:
            fields.append(str(e.corruption_code))
        lines.append("\t".join(fields))
    path.write_text("\n".join(lines) + "\n")


def read_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or not lines[0].startswith(MANIFEST_HEADER_PREFIX):
        raise ParseError(
            f"missing header {MANIFEST_HEADER_PREFIX!r}<n>", path=path, line=1
        )
    try:
        point_count = int(lines[0][len(MANIFEST_HEADER_PREFIX):])
    except ValueError:
        raise ParseError("unparseable point count in header", path=path, line=1)
    entries = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) not in (4, 5):
            raise ParseError(
                f"expected 4 or 5 tab-separated fields, got {len(fields)}",
                path=path,
                line=lineno,
            )
        try:
            class_id = int(fields[0])
            code = int(fields[4]) if len(fields) == 5 else 0
        except ValueError:
            raise ParseError("unparseable integer field", path=path, line=lineno)
        if not 0 <= code <= 7:
            raise ParseError(f"corruption code {code} out of range 0..7", path=path, line=lineno)
        entries.append(ManifestEntry(class_id, fields[1], fields[2], fields[3], code))
    try:
        return DatasetManifest(tuple(entries), point_count, root=path.parent)
    except InvalidInputError as exc:
        raise ParseError(str(exc), path=path)


def load_dataset(manifest_path: str | Path) -> tuple[DatasetManifest, list[LabeledSample]]:
    """Read a manifest and every cloud it references."""
    manifest = read_manifest(manifest_path)
    root = Path(manifest_path).parent
    samples = []
    for e in manifest.entries:
        cloud = load_cloud(root / e.path)
        samples.append(
            LabeledSample(
                cloud=cloud,
                label=e.class_id,
                source_id=e.source_id,
                corruption=CorruptionType.from_code(e.corruption_code),
            )
        )
    return manifest, samples


def save_dataset(
    out_dir: str | Path,
    samples: list[LabeledSample],
    class_names: list[str],
    point_count: int,
    format: str = "pcb",
) -> DatasetManifest:
    """Write clouds under ``clouds/`` plus a ``manifest.txt`` index."""
    out_dir = Path(out_dir)
    cloud_dir = out_dir / "clouds"
    cloud_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for s in samples:
        rel = f"clouds/{s.source_id}.{format}"
        save_cloud(s.cloud, out_dir / rel, format)
        entries.append(
            ManifestEntry(
                class_id=s.label,
                class_name=class_names[s.label],
                source_id=s.source_id,
                path=rel,
                corruption_code=tag_code(s.corruption),
            )
        )
    manifest = DatasetManifest(tuple(entries), point_count, root=out_dir)
    write_manifest(manifest, out_dir / "manifest.txt")
    return manifest
