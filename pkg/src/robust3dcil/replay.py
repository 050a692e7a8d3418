"""Memory-budgeted per-class replay buffer with downsampled storage.

Each class gets at most M stored points. With downsampled fraction
``alpha`` and rate ``r``, the per-class exemplar capacity is

    N = floor(M r / (n ((1 - alpha) r + alpha)))

where n is the full-cloud point count. Committing a class selects N
exemplars with a pluggable strategy, stores the first floor(alpha N) of
them (in selection order) downsampled by rate r and the rest at full
resolution, and re-extracts the stored feature from the stored form: the
degraded cloud is exactly what replay will serve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path

import numpy as np

from .cloud import PointCloud
from .dataset import LabeledSample
from .errors import (
    InvalidArgumentError,
    InvalidConfigError,
    InvalidInputError,
    InvalidStateError,
    ParseError,
)
from .pcio import load_cloud, save_cloud
from .sampling import downsample_exemplar

__all__ = [
    "BudgetConfig",
    "ExemplarForm",
    "ExemplarEntry",
    "ReplayBuffer",
    "capacity",
    "save_buffer",
    "load_buffer",
]

BUFFER_HEADER_PREFIX = "#robust3dcil-buffer v1 "


@dataclass(frozen=True)
class BudgetConfig:
    """Per-class memory budget: M points total, n points per full cloud."""

    M: int
    alpha: float = 0.5
    r: float = 2.0
    n: int = 1024

    def __post_init__(self):
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "r", float(self.r))
        if self.M < 1:
            raise InvalidConfigError(f"budget M must be >= 1 point, got {self.M}")
        if self.n < 1:
            raise InvalidConfigError(f"full-cloud point count must be >= 1, got {self.n}")
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.r < 1.0:
            raise InvalidConfigError(f"downsampling rate must be >= 1, got {self.r}")
        if self.alpha > 0.0:
            if self.r <= 1.0:
                raise InvalidConfigError("alpha > 0 requires a downsampling rate r > 1")
            if self.down_points < 1:
                raise InvalidConfigError(
                    f"rate {self.r} leaves no points in downsampled clouds of {self.n}"
                )
        if capacity(self) < 1:
            raise InvalidConfigError(
                f"budget M={self.M} stores no exemplar at n={self.n}, "
                f"alpha={self.alpha}, r={self.r}"
            )

    @property
    def down_points(self) -> int:
        return math.floor(self.n / self.r)


def capacity(budget: BudgetConfig) -> int:
    """Per-class exemplar capacity N; exact rational arithmetic, floored."""
    alpha = Fraction(budget.alpha)
    r = Fraction(budget.r)
    value = Fraction(budget.M) * r / (Fraction(budget.n) * ((1 - alpha) * r + alpha))
    return math.floor(value)


class ExemplarForm(Enum):
    FULL = "F"
    DOWN = "D"


@dataclass(frozen=True)
class ExemplarEntry:
    source_id: str
    label: int
    form: ExemplarForm
    cloud: PointCloud
    feature: np.ndarray = field(repr=False)


def _down_count(budget: BudgetConfig, n_entries: int) -> int:
    """Downsampled entries among n_entries: floor(alpha n), bumped to ceil
    when the floor split would overshoot the point budget."""
    d = math.floor(Fraction(budget.alpha) * n_entries)
    used = (n_entries - d) * budget.n + d * budget.down_points
    if used > budget.M:
        d = math.ceil(Fraction(budget.alpha) * n_entries)
    return d


class ReplayBuffer:
    """Per-class exemplar store; classes commit once and are then immutable."""

    def __init__(self, budget: BudgetConfig, extractor):
        self.budget = budget
        self.extractor = extractor
        self._classes: dict[int, list[ExemplarEntry]] = {}

    @property
    def capacity(self) -> int:
        return capacity(self.budget)

    @property
    def committed_classes(self) -> list[int]:
        return sorted(self._classes)

    def entries(self, class_id: int) -> list[ExemplarEntry]:
        if class_id not in self._classes:
            raise InvalidArgumentError(f"class {class_id} is not committed")
        return list(self._classes[class_id])

    def memory_used(self, class_id: int) -> int:
        """Exact stored point count for the class."""
        return sum(e.cloud.count for e in self.entries(class_id))

    def commit_class(
        self,
        class_id: int,
        candidates: list[tuple[LabeledSample, np.ndarray]],
        strategy,
        rng: np.random.Generator,
    ) -> list[ExemplarEntry]:
        """Select and store exemplars for a new class.

        ``candidates`` pairs each sample with the feature the strategy
        should select on. Selection order decides which exemplars are
        downsampled: the leading floor(alpha N') of them.
        """
        if class_id in self._classes:
            raise InvalidStateError(f"class {class_id} is already committed")
        if not candidates:
            raise InvalidInputError("candidate list is empty")
        features = [f for _, f in candidates]
        n_select = min(self.capacity, len(candidates))
        order = strategy.select(features, n_select, rng)
        n_down = _down_count(self.budget, n_select)
        entries = []
        for rank, idx in enumerate(order):
            sample, _ = candidates[idx]
            if rank < n_down:
                cloud = downsample_exemplar(sample.cloud, self.budget.r)
                form = ExemplarForm.DOWN
            else:
                cloud = sample.cloud
                form = ExemplarForm.FULL
            entries.append(
                ExemplarEntry(
                    source_id=sample.source_id,
                    label=sample.label,
                    form=form,
                    cloud=cloud,
                    feature=self.extractor.extract(cloud),
                )
            )
        self._classes[class_id] = entries
        used = sum(e.cloud.count for e in entries)
        if used > self.budget.M:
            raise InvalidStateError(
                f"internal accounting error: class {class_id} stored {used} > M={self.budget.M}"
            )
        return list(entries)

    def replay_batch(
        self,
        batch_size: int,
        rng: np.random.Generator,
        classes: list[int] | None = None,
    ) -> list[tuple[PointCloud, int]]:
        """Uniform-with-replacement batch over stored entries of ``classes``.

        Downsampled entries are replayed as stored; the degraded cloud is
        what the learner sees.
        """
        if classes is None:
            classes = self.committed_classes
        pool = [e for c in classes for e in self.entries(c)]
        if not pool:
            raise InvalidStateError("replay buffer holds no entries for the requested classes")
        if batch_size < 1:
            raise InvalidArgumentError(f"batch size must be >= 1, got {batch_size}")
        picks = rng.integers(len(pool), size=batch_size)
        return [(pool[i].cloud, pool[i].label) for i in picks]


def save_buffer(buffer: ReplayBuffer, out_dir: str | Path) -> None:
    """Persist the buffer as pcb clouds plus an index file."""
    out_dir = Path(out_dir)
    cloud_dir = out_dir / "clouds"
    cloud_dir.mkdir(parents=True, exist_ok=True)
    b = buffer.budget
    lines = [f"{BUFFER_HEADER_PREFIX}M={b.M} n={b.n} alpha={b.alpha!r} r={b.r!r}"]
    for class_id in buffer.committed_classes:
        for entry in buffer.entries(class_id):
            rel = f"clouds/{class_id:04d}_{entry.source_id}.pcb"
            save_cloud(entry.cloud, out_dir / rel, "pcb")
            lines.append(f"{class_id}\t{entry.source_id}\t{entry.form.value}\t{rel}")
    (out_dir / "index.txt").write_text("\n".join(lines) + "\n")


def load_buffer(in_dir: str | Path, extractor) -> ReplayBuffer:
    """Load a persisted buffer; stored features are re-extracted."""
    in_dir = Path(in_dir)
    index = in_dir / "index.txt"
    lines = index.read_text().splitlines()
    if not lines or not lines[0].startswith(BUFFER_HEADER_PREFIX):
        raise ParseError(f"missing header {BUFFER_HEADER_PREFIX!r}", path=index, line=1)
    params = {}
    for token in lines[0][len(BUFFER_HEADER_PREFIX):].split():
        key, _, value = token.partition("=")
        params[key] = value
    try:
        budget = BudgetConfig(
            M=int(params["M"]),
            n=int(params["n"]),
            alpha=float(params["alpha"]),
            r=float(params["r"]),
        )
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad header parameters: {exc}", path=index, line=1)
    buffer = ReplayBuffer(budget, extractor)
    by_class: dict[int, list[ExemplarEntry]] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise ParseError(
                f"expected 4 tab-separated fields, got {len(fields)}", path=index, line=lineno
            )
        class_id = int(fields[0])
        form = ExemplarForm(fields[2])
        cloud = load_cloud(in_dir / fields[3])
        by_class.setdefault(class_id, []).append(
            ExemplarEntry(
                source_id=fields[1],
                label=class_id,
                form=form,
                cloud=cloud,
                feature=extractor.extract(cloud),
            )
        )
    buffer._classes = by_class
    return buffer
