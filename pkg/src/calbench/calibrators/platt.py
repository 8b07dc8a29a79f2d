"""Platt scaling: a two-parameter sigmoid fitted by maximum likelihood."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_expit

from ..core import BinaryLabeledScores, CalibrationFitError, ConvergenceError


@dataclass(frozen=True)
class PlattParams:
    A: float
    B: float

    def __post_init__(self):
        if not (np.isfinite(self.A) and np.isfinite(self.B)):
            raise ValueError("Platt parameters must be finite")

    def predict(self, s):
        # 1 / (1 + exp(A s + B)) == expit(-(A s + B))
        return expit(-(self.A * np.asarray(s, dtype=float) + self.B))


def smoothed_targets(labels) -> np.ndarray:
    """Platt's regularised targets (N+ + 1)/(N+ + 2) and 1/(N- + 2)."""
    labels = np.asarray(labels)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    return np.where(labels == 1, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))


def platt_nll(A, B, scores, targets) -> float:
    """Negative Bernoulli log-likelihood, summed over the calibration set."""
    f = A * np.asarray(scores, dtype=float) + B
    # p = expit(-f): log p = log_expit(-f), log(1-p) = log_expit(f)
    return float(-np.sum(targets * log_expit(-f) + (1.0 - targets) * log_expit(f)))


def fit_platt(
    cal: BinaryLabeledScores, max_iter: int = 100, tol: float = 1e-10
) -> PlattParams:
    """Fit ``p = 1 / (1 + exp(A s + B))`` by damped Newton iterations.

    The objective is the mean negative log-likelihood of the smoothed targets;
    ``tol`` bounds the Euclidean norm of its gradient at the returned point.
    """
    if not cal.has_both_classes:
        raise CalibrationFitError("Platt scaling needs both classes in the calibration set")
    s = cal.scores.astype(float)
    t = smoothed_targets(cal.labels)
    n = s.size
    n_pos = cal.n_positive
    A, B = 0.0, float(np.log((n - n_pos + 1.0) / (n_pos + 1.0)))

    def objective(A, B):
        return platt_nll(A, B, s, t) / n

    obj = objective(A, B)
    for _ in range(max_iter):
        p = expit(-(A * s + B))
        # d/df of the per-sample loss is (t - p); f = A s + B
        r = t - p
        g = np.array([np.dot(r, s), r.sum()]) / n
        if np.hypot(*g) <= tol:
            return PlattParams(A, B)
        v = p * (1.0 - p)
        h11 = np.dot(v, s * s) / n + 1e-12
        h22 = v.sum() / n + 1e-12
        h12 = np.dot(v, s) / n
        det = h11 * h22 - h12 * h12
        dA = -(h22 * g[0] - h12 * g[1]) / det
        dB = -(-h12 * g[0] + h11 * g[1]) / det
        step = 1.0
        if np.hypot(*g) <= 1e-6:
            # objective differences are at rounding level here; take the pure Newton step
            A, B = A + dA, B + dB
            obj = objective(A, B)
            continue
        while step > 1e-12:
            nA, nB = A + step * dA, B + step * dB
            new = objective(nA, nB)
            if new <= obj + 1e-4 * step * (g[0] * dA + g[1] * dB):
                break
            step /= 2.0
        else:
            # no descent left in floating point; accept if the gradient is small
            if np.hypot(*g) <= 1e-8:
                return PlattParams(A, B)
            raise ConvergenceError("Platt line search failed", (A, B))
        A, B, obj = nA, nB, new
    p = expit(-(A * s + B))
    r = t - p
    if np.hypot(np.dot(r, s), r.sum()) / n <= tol:
        return PlattParams(A, B)
    raise ConvergenceError(f"Platt scaling did not converge in {max_iter} iterations", (A, B))


def apply_platt(params: PlattParams, s):
    return params.predict(s)
