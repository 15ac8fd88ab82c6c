"""Shared domain types and the two evaluation metrics.

Labels live in {0, 1}; sensitive groups live in {"a", "b"}.  Cell indices
throughout the package are ``[y, z]`` with ``z = 0`` for group ``a`` and
``z = 1`` for group ``b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

GROUPS = ("a", "b")
DECISION_THRESHOLD = 0.5


class FairboundError(ValueError):
    """Base class for input and consistency errors raised by this package."""


class EmptyCellError(FairboundError):
    """A (y, z) cell needed for a conditional rate holds no rows or no mass."""

    def __init__(self, y: int, z: str, what: str = "undefined conditional rate"):
        self.y, self.z = y, z
        super().__init__(f"{what}: cell (y={y}, z={z}) is empty")


def cell_name(y: int, z: int) -> str:
    return f"(y={y}, z={GROUPS[z]})"


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix with binary labels and binary group memberships."""

    features: np.ndarray
    labels: np.ndarray
    groups: np.ndarray
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        labels = np.asarray(self.labels)
        groups = np.asarray(self.groups, dtype=str)
        n = features.shape[0]
        if labels.shape != (n,) or groups.shape != (n,):
            raise FairboundError(
                f"row count mismatch: features {n}, labels {labels.shape}, groups {groups.shape}"
            )
        if np.isnan(features).any():
            raise FairboundError("missing values in feature matrix")
        names = tuple(self.feature_names) or tuple(f"x{j}" for j in range(features.shape[1]))
        if len(names) != features.shape[1]:
            raise FairboundError(f"{len(names)} feature names for {features.shape[1]} columns")
        for arr in (features, labels, groups):
            arr.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "feature_names", names)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def in_group_a(self) -> np.ndarray:
        return self.groups == "a"

    def cell_mask(self, y: int, z: int) -> np.ndarray:
        """Boolean row mask for the cell (Y=y, Z=GROUPS[z])."""
        return (self.labels == y) & (self.groups == GROUPS[z])

    def subset(self, idx) -> "LabeledDataset":
        return LabeledDataset(self.features[idx], self.labels[idx], self.groups[idx], self.feature_names)


@dataclass(frozen=True)
class GroupStatistics:
    """Plug-in estimates of P(Y=1), P(Z=a), P(Z=a|Y=1), P(Z=a|Y=0).

    A conditional whose conditioning event is empty is stored as 0; the
    corresponding zero in ``cell_counts`` is the flag.
    """

    alpha: float
    beta: float
    eta: float
    gamma: float
    cell_counts: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return int(self.cell_counts.sum())

    @property
    def empty_cells(self) -> list[tuple[int, str]]:
        return [(y, GROUPS[z]) for y in (0, 1) for z in (0, 1) if self.cell_counts[y, z] == 0]


@dataclass(frozen=True)
class Prediction:
    decisions: np.ndarray
    scores: np.ndarray | None = None
    threshold: float = DECISION_THRESHOLD

    def __post_init__(self):
        decisions = np.asarray(self.decisions).astype(int)
        if not np.isin(decisions, (0, 1)).all():
            raise FairboundError("decisions must be 0/1")
        if self.scores is not None:
            scores = np.asarray(self.scores, dtype=float)
            if scores.shape != decisions.shape:
                raise FairboundError("scores and decisions differ in length")
            if not np.array_equal(decisions, (scores >= self.threshold).astype(int)):
                raise FairboundError("decisions disagree with thresholded scores")
            object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "decisions", decisions)

    @classmethod
    def from_scores(cls, scores, threshold: float = DECISION_THRESHOLD) -> "Prediction":
        scores = np.asarray(scores, dtype=float)
        return cls((scores >= threshold).astype(int), scores, threshold)

    def __len__(self) -> int:
        return self.decisions.shape[0]

    def flipped(self) -> "Prediction":
        return Prediction(1 - self.decisions)


def _check_alphabet(data: LabeledDataset) -> None:
    if not np.isin(data.labels, (0, 1)).all():
        raise FairboundError("invalid alphabet: labels must be in {0, 1}")
    if not np.isin(data.groups, GROUPS).all():
        raise FairboundError("invalid alphabet: groups must be in {a, b}")


def cell_counts(data: LabeledDataset) -> np.ndarray:
    return np.array([[int(data.cell_mask(y, z).sum()) for z in (0, 1)] for y in (0, 1)])


def compute_group_stats(data: LabeledDataset) -> GroupStatistics:
    if len(data) == 0:
        raise FairboundError("empty dataset")
    _check_alphabet(data)
    counts = cell_counts(data)
    return stats_from_counts(counts)


def stats_from_counts(counts: np.ndarray) -> GroupStatistics:
    counts = np.asarray(counts, dtype=np.int64)
    n = counts.sum()
    if n == 0:
        raise FairboundError("empty dataset")
    n_pos, n_neg = counts[1].sum(), counts[0].sum()
    alpha = n_pos / n
    beta = counts[:, 0].sum() / n
    eta = counts[1, 0] / n_pos if n_pos else 0.0
    gamma = counts[0, 0] / n_neg if n_neg else 0.0
    return GroupStatistics(float(alpha), float(beta), float(eta), float(gamma), counts)


def _check_lengths(pred: Prediction, data: LabeledDataset) -> None:
    if len(pred) != len(data):
        raise FairboundError(f"prediction length {len(pred)} does not match dataset length {len(data)}")


def accuracy(pred: Prediction, data: LabeledDataset) -> float:
    _check_lengths(pred, data)
    if len(data) == 0:
        raise FairboundError("empty dataset")
    return float(np.mean(pred.decisions == data.labels))


def positive_rates(decisions: np.ndarray, data: LabeledDataset) -> np.ndarray:
    """2x2 array of empirical P(f=1 | Y=y, Z=z), indexed [y, z]."""
    rates = np.empty((2, 2))
    for y in (0, 1):
        for z in (0, 1):
            mask = data.cell_mask(y, z)
            if not mask.any():
                raise EmptyCellError(y, GROUPS[z])
            rates[y, z] = decisions[mask].mean()
    return rates


def delta_eo(pred: Prediction, data: LabeledDataset) -> float:
    """Largest cross-group gap in positive-decision rate, over both labels."""
    _check_lengths(pred, data)
    rates = positive_rates(pred.decisions, data)
    return float(np.max(np.abs(rates[:, 0] - rates[:, 1])))


def make_dataset(features, labels, groups: Sequence[str], feature_names=()) -> LabeledDataset:
    return LabeledDataset(np.asarray(features, dtype=float), np.asarray(labels), np.asarray(groups), tuple(feature_names))
