"""Three small reference classifiers that produce positive-class scores."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from .core import DatasetTable

LEARNERS = ("class_prior", "logistic", "gaussian_nb")

VAR_FLOOR = 1e-9
L2 = 1e-4
GD_ITERATIONS = 500
GD_STEP = 0.1
GD_DECAY = 1e-3


class LearnerFitError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ClassPrior:
    rate: float

    def __post_init__(self):
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError("rate must be in [0, 1]")

    n_features = None

    def predict_scores(self, rows):
        return np.full(np.shape(rows)[0], self.rate)


@dataclass(frozen=True, eq=False)
class Logistic:
    """Linear logit on standardised features: ``sigmoid(z @ weights + bias)``."""

    weights: np.ndarray
    bias: float
    center: np.ndarray
    scale: np.ndarray

    @property
    def n_features(self):
        return self.weights.size

    def predict_scores(self, rows):
        z = (rows - self.center) / self.scale
        return expit(z @ self.weights + self.bias)


@dataclass(frozen=True, eq=False)
class GaussianNB:
    means: np.ndarray  # (2, d)
    variances: np.ndarray  # (2, d)
    priors: np.ndarray  # (2,)

    @property
    def n_features(self):
        return self.means.shape[1]

    def predict_scores(self, rows):
        log_joint = np.empty((rows.shape[0], 2))
        for c in (0, 1):
            var = self.variances[c]
            log_joint[:, c] = np.log(self.priors[c]) - 0.5 * np.sum(
                np.log(2 * np.pi * var) + (rows - self.means[c]) ** 2 / var, axis=1
            )
        return np.exp(log_joint[:, 1] - logsumexp(log_joint, axis=1))


def _rows(data):
    return data.rows if isinstance(data, DatasetTable) else np.atleast_2d(np.asarray(data, dtype=float))


def _fit_logistic(x, y):
    center = x.mean(axis=0)
    scale = x.std(axis=0)
    scale[scale == 0] = 1.0
    z = (x - center) / scale
    n, d = z.shape
    w = np.zeros(d)
    rate = y.mean()
    b = float(np.log(rate / (1 - rate)))
    for t in range(GD_ITERATIONS):
        r = expit(z @ w + b) - y
        step = GD_STEP / (1.0 + GD_DECAY * t)
        w -= step * (z.T @ r / n + L2 * w)
        b -= step * r.mean()
    return Logistic(w, b, center, scale)


def _fit_gnb(x, y):
    means = np.vstack([x[y == c].mean(axis=0) for c in (0, 1)])
    variances = np.vstack([np.maximum(x[y == c].var(axis=0), VAR_FLOOR) for c in (0, 1)])
    priors = np.array([np.mean(y == 0), np.mean(y == 1)])
    return GaussianNB(means, variances, priors)


def fit_learner(kind: str, train: DatasetTable, seed: int = 0):
    """Fit a reference learner.

    ``seed`` is accepted for interface symmetry; all three fits are
    deterministic given the data.
    """
    y = train.labels.astype(float)
    if train.n == 0:
        raise LearnerFitError("empty training set")
    if kind == "class_prior":
        return ClassPrior(float(y.mean()))
    if kind not in LEARNERS:
        raise ValueError(f"unknown learner {kind!r}; choose from {LEARNERS}")
    if y.min() == y.max():
        raise LearnerFitError(f"{kind} needs both classes in the training set")
    if kind == "logistic":
        return _fit_logistic(train.rows, y)
    return _fit_gnb(train.rows, y)


def predict_scores(model, rows) -> np.ndarray:
    x = _rows(rows)
    if model.n_features is not None and x.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got {x.shape[1]}")
    return np.clip(model.predict_scores(x), 0.0, 1.0)
