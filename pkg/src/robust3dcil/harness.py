"""Class-incremental scenario construction, training, and evaluation.

A scenario shuffles classes by seed, splits them into contiguous task
groups (sizes differing by at most one, earlier tasks taking extras),
splits each class into train/test, mixes the train pool with corrupted
versions, and expands each test cloud 8x (the clean original plus one
sample per corruption type).

The learner is a nearest-mean classifier over extractor features: a new
class's prototype is the mean feature of its training pool; from the next
task on, prototypes of old classes are rebuilt from the replay buffer's
stored features, so buffer content is the only carrier of old-class
knowledge. Disabling the buffer leaves old prototypes frozen, and accuracy
on early classes decays as new classes crowd the feature space.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .corruption import MixPolicy, corrupt_training_class, expand_test_set
from .dataset import LabeledSample, tag_name
from .errors import InvalidConfigError, InvalidInputError, InvalidStateError
from .features import class_mean
from .replay import BudgetConfig, ReplayBuffer, capacity
from .rng import derive_rng

__all__ = [
    "Scenario",
    "ClassifierState",
    "EvalResult",
    "ExperimentResult",
    "build_scenario",
    "prepare_scenario",
    "PreparedScenario",
    "train_task",
    "evaluate",
    "run_prepared",
    "run_experiment",
    "scenario_digest",
]

THREADS_ENV = "ROBUST3DCIL_THREADS"


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _map(fn, items):
    """Order-preserving map, threaded when ROBUST3DCIL_THREADS > 1."""
    threads = _thread_count()
    if threads == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class Scenario:
    """Task stream: per-task class sets, mixed train pools, expanded test pools."""

    task_class_sets: tuple[tuple[int, ...], ...]
    train_pools: tuple[tuple[LabeledSample, ...], ...]
    test_pools: tuple[tuple[LabeledSample, ...], ...]
    seed: int
    mix: MixPolicy

    @property
    def num_tasks(self) -> int:
        return len(self.task_class_sets)

    def cumulative_test_pool(self, upto_task: int) -> list[LabeledSample]:
        """All test samples for tasks 0..upto_task inclusive."""
        pool: list[LabeledSample] = []
        for t in range(upto_task + 1):
            pool.extend(self.test_pools[t])
        return pool


def build_scenario(
    samples: list[LabeledSample],
    num_tasks: int,
    mix: MixPolicy,
    seed: int,
    test_fraction: float = 0.2,
) -> Scenario:
    """Construct the task stream from a clean labeled dataset."""
    if any(s.corruption is not None for s in samples):
        raise InvalidInputError("scenario construction needs an all-clean dataset")
    by_class: dict[int, list[LabeledSample]] = {}
    for s in samples:
        by_class.setdefault(s.label, []).append(s)
    class_ids = sorted(by_class)
    if num_tasks < 1:
        raise InvalidConfigError(f"task count must be >= 1, got {num_tasks}")
    if num_tasks > len(class_ids):
        raise InvalidConfigError(f"cannot split {len(class_ids)} classes into {num_tasks} tasks")
    if not 0.0 < test_fraction < 1.0:
        raise InvalidConfigError(f"test fraction must be in (0, 1), got {test_fraction}")

    order = list(np.array(class_ids)[derive_rng(seed, "task-order").permutation(len(class_ids))])
    base, extra = divmod(len(order), num_tasks)
    task_sets = []
    cursor = 0
    for t in range(num_tasks):
        size = base + (1 if t < extra else 0)
        task_sets.append(tuple(int(c) for c in order[cursor : cursor + size]))
        cursor += size

    train_by_class: dict[int, list[LabeledSample]] = {}
    test_by_class: dict[int, list[LabeledSample]] = {}
    for k in class_ids:
        pool = by_class[k]
        if len(pool) < 2:
            raise InvalidConfigError(f"class {k} needs at least 2 samples to split")
        n_test = int(round(test_fraction * len(pool)))
        n_test = min(max(n_test, 1), len(pool) - 1)
        perm = derive_rng(seed, "split", k).permutation(len(pool))
        test_idx = sorted(int(i) for i in perm[:n_test])
        train_idx = sorted(int(i) for i in perm[n_test:])
        clean_train = [pool[i] for i in train_idx]
        clean_test = [pool[i] for i in test_idx]
        train_by_class[k] = corrupt_training_class(clean_train, mix, derive_rng(seed, "mix", k))
        test_by_class[k] = expand_test_set(clean_test, mix.level, derive_rng(seed, "test-expand", k))

    train_pools = tuple(
        tuple(s for k in task for s in train_by_class[k]) for task in task_sets
    )
    test_pools = tuple(
        tuple(s for k in task for s in test_by_class[k]) for task in task_sets
    )
    return Scenario(tuple(task_sets), train_pools, test_pools, seed, mix)


def scenario_digest(scenario: Scenario) -> str:
    """Stable content hash of the scenario payload (clouds, labels, tags)."""
    h = hashlib.sha256()
    for pools in (scenario.train_pools, scenario.test_pools):
        for pool in pools:
            for s in pool:
                h.update(s.cloud.points.tobytes())
                h.update(f"{s.label}:{s.source_id}:{tag_name(s.corruption)}".encode())
    return h.hexdigest()


@dataclass(frozen=True)
class PreparedScenario:
    """Scenario plus cached features (extraction dominates runtime)."""

    scenario: Scenario
    extractor_dim: int
    train_features: tuple[np.ndarray, ...]  # per task, (pool size, dim)
    test_features: tuple[np.ndarray, ...]


def prepare_scenario(scenario: Scenario, extractor) -> PreparedScenario:
    """Extract features for every train and test sample once."""
    train_feats = tuple(
        np.array(_map(lambda s: extractor.extract(s.cloud), list(pool)))
        for pool in scenario.train_pools
    )
    test_feats = tuple(
        np.array(_map(lambda s: extractor.extract(s.cloud), list(pool)))
        for pool in scenario.test_pools
    )
    return PreparedScenario(scenario, extractor.dim, train_feats, test_feats)


@dataclass
class ClassifierState:
    """Nearest-mean classifier: one feature prototype per seen class."""

    prototypes: dict[int, np.ndarray] = field(default_factory=dict)
    seen_task_sets: list[tuple[int, ...]] = field(default_factory=list)

    @property
    def seen_classes(self) -> set[int]:
        return set(self.prototypes)


def train_task(
    state: ClassifierState,
    buffer: ReplayBuffer | None,
    task_samples: list[LabeledSample],
    extractor,
    strategy,
    rng: np.random.Generator,
    features: np.ndarray | None = None,
) -> None:
    """Learn one task: set new prototypes, refresh old ones from the buffer,
    commit the new classes.

    With no buffer, old prototypes are left as last computed.
    """
    if not task_samples:
        raise InvalidInputError("task sample list is empty")
    task_classes = sorted({s.label for s in task_samples})
    overlap = state.seen_classes & set(task_classes)
    if overlap:
        raise InvalidStateError(f"classes {sorted(overlap)} were already trained")
    if features is None:
        features = np.array(_map(lambda s: extractor.extract(s.cloud), list(task_samples)))

    by_class: dict[int, list[int]] = {k: [] for k in task_classes}
    for i, s in enumerate(task_samples):
        by_class[s.label].append(i)

    for k in task_classes:
        state.prototypes[k] = class_mean(features[by_class[k]])

    if buffer is not None:
        for old in sorted(state.seen_classes - set(task_classes)):
            state.prototypes[old] = class_mean([e.feature for e in buffer.entries(old)])
        children = rng.spawn(len(task_classes))
        for k, child in zip(task_classes, children):
            candidates = [(task_samples[i], features[i]) for i in by_class[k]]
            buffer.commit_class(k, candidates, strategy, child)

    state.seen_task_sets.append(tuple(task_classes))


@dataclass(frozen=True)
class EvalResult:
    overall_accuracy: float
    per_tag: dict[str, tuple[float, int]]  # tag -> (accuracy, sample count)
    per_class: dict[int, tuple[float, int]]

    def class_set_accuracy(self, classes) -> float:
        correct = sum(self.per_class[k][0] * self.per_class[k][1] for k in classes)
        total = sum(self.per_class[k][1] for k in classes)
        return correct / total


def evaluate(
    state: ClassifierState,
    test_pool: list[LabeledSample],
    extractor,
    features: np.ndarray | None = None,
) -> EvalResult:
    """Nearest-prototype classification; ties go to the lowest class id."""
    if not state.prototypes:
        raise InvalidStateError("no classes trained yet")
    if not test_pool:
        raise InvalidInputError("test pool is empty")
    labels = np.array([s.label for s in test_pool])
    unseen = set(labels.tolist()) - state.seen_classes
    if unseen:
        raise InvalidInputError(f"test pool contains unseen classes {sorted(unseen)}")
    if features is None:
        features = np.array(_map(lambda s: extractor.extract(s.cloud), list(test_pool)))

    class_ids = sorted(state.prototypes)
    protos = np.array([state.prototypes[k] for k in class_ids])
    diff = features[:, None, :] - protos[None, :, :]
    dists = np.einsum("ijk,ijk->ij", diff, diff)
    predicted = np.array(class_ids)[np.argmin(dists, axis=1)]
    correct = predicted == labels

    per_tag: dict[str, tuple[float, int]] = {}
    tags = np.array([tag_name(s.corruption) for s in test_pool])
    for tag in dict.fromkeys(tags.tolist()):
        mask = tags == tag
        per_tag[tag] = (float(correct[mask].mean()), int(mask.sum()))
    per_class: dict[int, tuple[float, int]] = {}
    for k in sorted(set(labels.tolist())):
        mask = labels == k
        per_class[k] = (float(correct[mask].mean()), int(mask.sum()))
    return EvalResult(float(correct.mean()), per_tag, per_class)


@dataclass(frozen=True)
class ExperimentResult:
    """Per-task and final metrics for one full incremental run."""

    task_class_sets: tuple[tuple[int, ...], ...]
    per_task_oa: list[float]
    average_oa: float
    final_per_tag: dict[str, tuple[float, int]]
    per_task_tag: list[dict[str, tuple[float, int]]]
    task_set_accuracy: list[list[float]]  # [t][s]: accuracy on task-s classes after task t
    seen_classes_per_task: list[int]
    capacity: int | None
    seed: int


def run_prepared(
    prep: PreparedScenario,
    budget: BudgetConfig | None,
    strategy,
    extractor,
) -> ExperimentResult:
    """Run the incremental loop over a prepared scenario.

    ``budget`` None disables replay entirely (the no-buffer baseline).
    """
    scenario = prep.scenario
    state = ClassifierState()
    buffer = ReplayBuffer(budget, extractor) if budget is not None else None

    per_task_oa: list[float] = []
    per_task_tag: list[dict[str, tuple[float, int]]] = []
    task_set_acc: list[list[float]] = []
    seen_counts: list[int] = []
    final_eval: EvalResult | None = None

    for t in range(scenario.num_tasks):
        train_task(
            state,
            buffer,
            list(scenario.train_pools[t]),
            extractor,
            strategy,
            derive_rng(scenario.seed, "train", t),
            features=prep.train_features[t],
        )
        pool = scenario.cumulative_test_pool(t)
        feats = np.concatenate(prep.test_features[: t + 1], axis=0)
        result = evaluate(state, pool, extractor, features=feats)
        per_task_oa.append(result.overall_accuracy)
        per_task_tag.append(result.per_tag)
        task_set_acc.append(
            [result.class_set_accuracy(scenario.task_class_sets[s]) for s in range(t + 1)]
        )
        seen_counts.append(len(state.seen_classes))
        final_eval = result

    assert final_eval is not None
    return ExperimentResult(
        task_class_sets=scenario.task_class_sets,
        per_task_oa=per_task_oa,
        average_oa=float(np.mean(per_task_oa)),
        final_per_tag=final_eval.per_tag,
        per_task_tag=per_task_tag,
        task_set_accuracy=task_set_acc,
        seen_classes_per_task=seen_counts,
        capacity=capacity(budget) if budget is not None else None,
        seed=scenario.seed,
    )


def run_experiment(
    samples: list[LabeledSample],
    num_tasks: int,
    mix: MixPolicy,
    budget: BudgetConfig | None,
    strategy,
    extractor,
    seed: int,
    test_fraction: float = 0.2,
) -> ExperimentResult:
    """Build, prepare, and run a scenario end to end."""
    scenario = build_scenario(samples, num_tasks, mix, seed, test_fraction)
    prep = prepare_scenario(scenario, extractor)
    return run_prepared(prep, budget, strategy, extractor)
