"""Exemplar selection strategies.

Farthest exemplar selection walks the candidate set like farthest point
sampling, but instead of always taking the farthest candidate it samples
the next exemplar from a probability vector built from the min-distances
to the already-selected set. The probability family determines behavior:
an indicator on the maximum reduces to farthest point sampling, a constant
reduces to uniform random sampling, and the sigmoid interpolates with
steepness ``k`` and randomness floor ``c``.

Herding (pick closest to the mean of the still-unselected samples) and
plain uniform sampling are provided as baselines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, InvalidInputError

__all__ = [
    "SigmoidProbability",
    "IndicatorProbability",
    "ConstantProbability",
    "sigmoid_weights",
    "sigmoid_prob",
    "farthest_exemplar_select",
    "herding_select",
    "uniform_random_select",
    "FarthestStrategy",
    "HerdingStrategy",
    "RandomStrategy",
    "strategy_from_name",
]


def sigmoid_weights(d_normalized: np.ndarray, k: float, c: float) -> np.ndarray:
    """Unnormalized selection weights 1 / (1 + exp(-k (d - mean(d)))) + c.

    ``d_normalized`` must already be divided by its max; the mean is taken
    over the normalized values. A candidate sitting exactly at the mean
    gets weight 0.5 + c.
    """
    d = np.asarray(d_normalized, dtype=np.float64)
    return 1.0 / (1.0 + np.exp(-k * (d - d.mean()))) + c


def sigmoid_prob(d_normalized: np.ndarray, k: float, c: float) -> np.ndarray:
    """Normalized selection probabilities for the sigmoid family."""
    d = np.asarray(d_normalized, dtype=np.float64)
    if d.size == 0:
        raise InvalidInputError("need at least one candidate")
    w = sigmoid_weights(d, k, c)
    total = w.sum()
    if total <= 0.0:
        return np.full(d.size, 1.0 / d.size)
    return w / total


@dataclass(frozen=True)
class SigmoidProbability:
    """Sigmoid probability family; c > 0 keeps every candidate selectable."""

    k: float = 20.0
    c: float = 0.2

    def __post_init__(self):
        if self.k <= 0:
            raise InvalidArgumentError(f"steepness k must be > 0, got {self.k}")
        if self.c < 0:
            raise InvalidArgumentError(f"randomness floor c must be >= 0, got {self.c}")

    def weights(self, d_normalized: np.ndarray) -> np.ndarray:
        return sigmoid_weights(d_normalized, self.k, self.c)


@dataclass(frozen=True)
class IndicatorProbability:
    """All mass on the farthest candidate (lowest index on ties)."""

    def weights(self, d_normalized: np.ndarray) -> np.ndarray:
        w = np.zeros(d_normalized.shape[0])
        w[int(np.argmax(d_normalized))] = 1.0
        return w


@dataclass(frozen=True)
class ConstantProbability:
    """Distance-blind constant weights."""

    value: float = 1.0

    def __post_init__(self):
        if self.value <= 0:
            raise InvalidArgumentError(f"constant weight must be > 0, got {self.value}")

    def weights(self, d_normalized: np.ndarray) -> np.ndarray:
        return np.full(d_normalized.shape[0], self.value)


def _as_feature_matrix(features) -> np.ndarray:
    mat = np.asarray(features, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] < 1:
        raise InvalidInputError(f"features must form an (m, d) matrix, got shape {mat.shape}")
    return mat


def _check_n(n_select: int, m: int) -> None:
    if n_select < 1:
        raise InvalidArgumentError(f"selection count must be >= 1, got {n_select}")
    if n_select > m:
        raise InvalidArgumentError(f"cannot select {n_select} of {m} candidates")


def farthest_exemplar_select(
    features,
    n_select: int,
    prob,
    rng: np.random.Generator,
    start_index: int | None = None,
) -> list[int]:
    """Probabilistic farthest-first selection of ``n_select`` indices.

    The first index is drawn uniformly (or pinned via ``start_index``);
    each later index is sampled from the probability vector the ``prob``
    family assigns to the max-normalized min-distances of the unselected
    candidates. Distances are Euclidean in feature space, normalization
    and the probability vector are recomputed every iteration. When every
    unselected candidate coincides with the selected set (max distance 0)
    the draw falls back to uniform.
    """
    mat = _as_feature_matrix(features)
    m = mat.shape[0]
    _check_n(n_select, m)
    if start_index is None:
        start_index = int(rng.integers(m))
    if not 0 <= start_index < m:
        raise InvalidArgumentError(f"start index {start_index} out of range for {m} candidates")

    selected = [start_index]
    unselected = np.ones(m, dtype=bool)
    unselected[start_index] = False
    min_dist = np.linalg.norm(mat - mat[start_index], axis=1)

    while len(selected) < n_select:
        cand = np.flatnonzero(unselected)
        d = min_dist[cand]
        d_max = d.max()
        if d_max <= 0.0:
            p = np.full(cand.size, 1.0 / cand.size)
        else:
            w = prob.weights(d / d_max)
            total = w.sum()
            p = np.full(cand.size, 1.0 / cand.size) if total <= 0.0 else w / total
        pick = int(rng.choice(cand, p=p))
        selected.append(pick)
        unselected[pick] = False
        np.minimum(min_dist, np.linalg.norm(mat - mat[pick], axis=1), out=min_dist)
    return selected


def herding_select(features, n_select: int) -> list[int]:
    """Pick the candidate closest to the mean of the unselected, repeatedly.

    The mean is recomputed over the remaining unselected candidates each
    step; ties resolve to the lowest index. Deterministic, no rng.
    """
    mat = _as_feature_matrix(features)
    m = mat.shape[0]
    _check_n(n_select, m)
    unselected = np.ones(m, dtype=bool)
    selected: list[int] = []
    for _ in range(n_select):
        cand = np.flatnonzero(unselected)
        mu = mat[cand].mean(axis=0)
        pick = int(cand[np.argmin(np.linalg.norm(mat[cand] - mu, axis=1))])
        selected.append(pick)
        unselected[pick] = False
    return selected


def uniform_random_select(features, n_select: int, rng: np.random.Generator) -> list[int]:
    """Uniform selection without replacement, in draw order."""
    mat = _as_feature_matrix(features)
    _check_n(n_select, mat.shape[0])
    return [int(i) for i in rng.choice(mat.shape[0], size=n_select, replace=False)]


@dataclass(frozen=True)
class FarthestStrategy:
    prob: SigmoidProbability | IndicatorProbability | ConstantProbability = SigmoidProbability()

    name = "farthest"

    def select(self, features, n_select: int, rng: np.random.Generator) -> list[int]:
        return farthest_exemplar_select(features, n_select, self.prob, rng)


@dataclass(frozen=True)
class HerdingStrategy:
    name = "herding"

    def select(self, features, n_select: int, rng: np.random.Generator) -> list[int]:
        return herding_select(features, n_select)


@dataclass(frozen=True)
class RandomStrategy:
    name = "random"

    def select(self, features, n_select: int, rng: np.random.Generator) -> list[int]:
        return uniform_random_select(features, n_select, rng)


def strategy_from_name(name: str, k: float = 20.0, c: float = 0.2):
    """Build a selection strategy from its config name."""
    if name == "farthest":
        return FarthestStrategy(SigmoidProbability(k=k, c=c))
    if name == "herding":
        return HerdingStrategy()
    if name == "random":
        return RandomStrategy()
    raise InvalidArgumentError(
        f"unknown selection strategy {name!r}; expected farthest, herding, or random"
    )
