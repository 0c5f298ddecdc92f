import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

from config.settings import NUM_LABELS
from models.errors import DimensionError, ParameterError

SUM_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class LabelDistribution:
    """Relative frequency of each label over a fixed label space."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise DimensionError("A label distribution must be a non-empty vector")
        if np.any(probs < 0.0) or np.any(probs > 1.0):
            raise ParameterError("Label probabilities must lie in [0, 1]")
        if abs(probs.sum() - 1.0) > SUM_TOLERANCE:
            raise ParameterError(
                f"Label probabilities must sum to 1, got {probs.sum():.12f}"
            )
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def num_labels(self) -> int:
        return int(self.probs.size)

    @classmethod
    def from_counts(cls, counts: Sequence[float]) -> "LabelDistribution":
        """Normalize raw per-label counts; an all-zero vector is rejected."""
        counts = np.asarray(counts, dtype=np.float64)
        if np.any(counts < 0):
            raise ParameterError("Label counts must be non-negative")
        total = counts.sum()
        if total <= 0:
            raise ParameterError("Cannot build a distribution from all-zero counts")
        return cls(counts / total)

    @classmethod
    def uniform(cls, labels: Iterable[int], num_labels: int = NUM_LABELS) -> "LabelDistribution":
        counts = np.zeros(num_labels)
        for label in labels:
            if not 0 <= label < num_labels:
                raise DimensionError(f"Label {label} outside [0, {num_labels})")
            counts[label] = 1.0
        return cls.from_counts(counts)

    @classmethod
    def from_pairs(cls, pairs: Sequence[Sequence[float]], num_labels: int = NUM_LABELS) -> "LabelDistribution":
        """Build from [label, weight] pairs as written in scenario configs."""
        counts = np.zeros(num_labels)
        for label, weight in pairs:
            label = int(label)
            if not 0 <= label < num_labels:
                raise DimensionError(f"Label {label} outside [0, {num_labels})")
            counts[label] += float(weight)
        return cls.from_counts(counts)

    def to_pairs(self) -> list:
        return [[int(label), float(p)] for label, p in enumerate(self.probs) if p > 0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabelDistribution):
            return NotImplemented
        return bool(np.array_equal(self.probs, other.probs))

    def __hash__(self) -> int:
        return hash(self.probs.tobytes())

    def __repr__(self) -> str:
        return f"LabelDistribution({self.to_pairs()})"


@dataclass(frozen=True)
class LabelSet:
    """Ascending, duplicate-free set of label ids; the key of a gradient table."""

    labels: Tuple[int, ...]
    num_labels: int = NUM_LABELS

    def __post_init__(self):
        labels = tuple(int(label) for label in self.labels)
        if len(set(labels)) != len(labels):
            raise ParameterError(f"Duplicate labels in {labels}")
        for label in labels:
            if not 0 <= label < self.num_labels:
                raise DimensionError(f"Label {label} outside [0, {self.num_labels})")
        object.__setattr__(self, "labels", tuple(sorted(labels)))

    def issubset(self, other: "LabelSet") -> bool:
        return set(self.labels) <= set(other.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __str__(self) -> str:
        return "{" + ",".join(str(label) for label in self.labels) + "}"


def _check_same_space(p1: LabelDistribution, p2: LabelDistribution) -> None:
    if p1.num_labels != p2.num_labels:
        raise DimensionError(
            f"Label spaces differ: {p1.num_labels} vs {p2.num_labels}"
        )


def similarity(p1: LabelDistribution, p2: LabelDistribution) -> float:
    """Sum over labels of the smaller of the two frequencies."""
    _check_same_space(p1, p2)
    total = float(np.minimum(p1.probs, p2.probs).sum())
    return min(1.0, max(0.0, total))


def weight_from_similarity(sim: float, lam: float) -> float:
    if lam <= 0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    return math.exp(-lam * (1.0 - sim))


def weight(dist: LabelDistribution, goal: LabelDistribution, lam: float) -> float:
    """Aggregation weight of gradients learned on `dist` for a device pursuing `goal`."""
    return weight_from_similarity(similarity(goal, dist), lam)


def label_set_of(dist: LabelDistribution) -> LabelSet:
    support = tuple(int(label) for label in np.flatnonzero(dist.probs > 0))
    return LabelSet(support, dist.num_labels)


def restrict_to(labels: LabelSet) -> LabelDistribution:
    """Uniform distribution over a label set."""
    return LabelDistribution.uniform(labels.labels, labels.num_labels)
