"""Shared domain types, score validation and seed derivation."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

LOG_LOSS_EPS = 1e-15
BETA_EPS = 1e-6


class ScoreValidationError(ValueError):
    """Raised when a score vector contains a non-finite value."""

    def __init__(self, index: int, value: float):
        super().__init__(f"non-finite score {value!r} at index {index}")
        self.index = index
        self.value = value


class CalibrationFitError(RuntimeError):
    """A calibrator could not be fitted on the given calibration split."""


class ConvergenceError(CalibrationFitError):
    def __init__(self, message, last_iterate):
        super().__init__(message)
        self.last_iterate = last_iterate


def _frozen(a) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class BinaryLabeledScores:
    """Positive-class scores and their {0, 1} labels for one split.

    Arrays are copied and made read-only on construction.
    """

    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=float).ravel()
        labels = np.asarray(self.labels).ravel()
        if scores.shape != labels.shape:
            raise ValueError(
                f"scores and labels differ in length: {scores.size} != {labels.size}"
            )
        if scores.size == 0:
            raise ValueError("at least one instance is required")
        bad = ~np.isfinite(scores)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise ScoreValidationError(i, float(scores[i]))
        if scores.min() < 0.0 or scores.max() > 1.0:
            raise ValueError("scores must lie in [0, 1]")
        if not np.isin(labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        object.__setattr__(self, "scores", _frozen(scores))
        object.__setattr__(self, "labels", _frozen(labels.astype(np.int8)))

    @property
    def n(self) -> int:
        return int(self.scores.size)

    @property
    def n_positive(self) -> int:
        return int(self.labels.sum())

    @property
    def has_both_classes(self) -> bool:
        return 0 < self.n_positive < self.n

    def subset(self, indices) -> "BinaryLabeledScores":
        return BinaryLabeledScores(self.scores[indices], self.labels[indices])


@dataclass(frozen=True, eq=False)
class DatasetTable:
    """Feature matrix ``rows`` (N x d) with binary ``labels``."""

    rows: np.ndarray
    labels: np.ndarray
    dataset_id: str = "dataset"

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim == 1:
            rows = rows.reshape(-1, 1)
        if rows.ndim != 2 or rows.shape[1] < 1:
            raise ValueError("rows must be a 2-D array with at least one column")
        labels = np.asarray(self.labels).ravel()
        if labels.size != rows.shape[0]:
            raise ValueError(
                f"{rows.shape[0]} rows but {labels.size} labels"
            )
        if not np.isin(labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        object.__setattr__(self, "rows", _frozen(rows))
        object.__setattr__(self, "labels", _frozen(labels.astype(np.int8)))

    @property
    def n(self) -> int:
        return int(self.rows.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.rows.shape[1])

    def take(self, indices) -> "DatasetTable":
        return DatasetTable(self.rows[indices], self.labels[indices], self.dataset_id)


@dataclass(frozen=True, eq=False)
class TrueConditionals:
    """True P(Y=1 | X=x_i) for every row of a dataset."""

    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float).ravel()
        if not np.all((q >= 0.0) & (q <= 1.0)):
            raise ValueError("true conditionals must lie in [0, 1]")
        object.__setattr__(self, "q", _frozen(q))

    def __len__(self):
        return int(self.q.size)


@dataclass(frozen=True, order=True)
class RunKey:
    """Identifies one benchmark cell: (dataset, fold, learner, calibrator)."""

    dataset_id: str
    fold: int
    learner_id: str
    calibrator_id: str = field(default="none")

    def canonical(self) -> str:
        return (
            f"dataset={self.dataset_id}|fold={self.fold}"
            f"|learner={self.learner_id}|calibrator={self.calibrator_id}"
        )


def validate_scores(raw, clip_eps: float = LOG_LOSS_EPS) -> np.ndarray:
    """Clamp scores into ``[clip_eps, 1 - clip_eps]``.

    Raises
    ------
    ScoreValidationError
        If any value is NaN or infinite; carries the offending index.
    """
    if not 0.0 < clip_eps < 0.5:
        raise ValueError(f"clip_eps must be in (0, 0.5), got {clip_eps}")
    raw = np.asarray(raw, dtype=float)
    bad = ~np.isfinite(raw)
    if bad.any():
        i = int(np.flatnonzero(bad.ravel())[0])
        raise ScoreValidationError(i, float(raw.ravel()[i]))
    return np.clip(raw, clip_eps, 1.0 - clip_eps)


def derive_task_seed(master_seed: int, key: RunKey | str) -> int:
    """Mix ``master_seed`` with a run key into a stable unsigned 64-bit seed."""
    text = key.canonical() if isinstance(key, RunKey) else str(key)
    h = hashlib.blake2b(digest_size=8, person=b"calbench")
    h.update(f"{int(master_seed)}#{text}".encode())
    return int.from_bytes(h.digest(), "little")
