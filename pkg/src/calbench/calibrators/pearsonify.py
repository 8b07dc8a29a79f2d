"""Split-conformal intervals on the Pearson-residual scale.

Nonconformity is the absolute Pearson residual ``|y - p| / sqrt(p (1 - p))``.
A test score ``s`` gets the band ``s +/- q sqrt(s (1 - s))`` clipped to
[0, 1], and its midpoint serves as the point estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import BETA_EPS, BinaryLabeledScores

DEFAULT_ALPHA = 0.1


@dataclass(frozen=True)
class PearsonifyModel:
    q_alpha: float
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if not (np.isfinite(self.q_alpha) and self.q_alpha >= 0):
            raise ValueError("q_alpha must be finite and non-negative")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must be in (0, 1)")

    def interval(self, s):
        s = np.asarray(s, dtype=float)
        half = self.q_alpha * np.sqrt(s * (1.0 - s))
        return np.maximum(0.0, s - half), np.minimum(1.0, s + half)

    def predict(self, s):
        lo, hi = self.interval(s)
        return (lo + hi) / 2.0


def pearson_residuals(scores, labels, clip_eps: float = BETA_EPS) -> np.ndarray:
    p = np.clip(np.asarray(scores, dtype=float), clip_eps, 1.0 - clip_eps)
    return np.abs(np.asarray(labels, dtype=float) - p) / np.sqrt(p * (1.0 - p))


def conformal_quantile(residuals, alpha: float) -> float:
    """The ceil((n + 1)(1 - alpha))-th smallest residual.

    When that rank exceeds n the largest residual is returned, which keeps
    the band finite.
    """
    r = np.sort(np.asarray(residuals, dtype=float))
    n = r.size
    if n == 0:
        raise ValueError("empty calibration set")
    rank = math.ceil((n + 1) * (1 - alpha))
    return float(r[min(max(rank, 1), n) - 1])


def fit_pearsonify(cal: BinaryLabeledScores, alpha: float = DEFAULT_ALPHA) -> PearsonifyModel:
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    return PearsonifyModel(conformal_quantile(pearson_residuals(cal.scores, cal.labels), alpha), alpha)


def apply_pearsonify(model: PearsonifyModel, s):
    """Return ``(lo, hi, point)``."""
    lo, hi = model.interval(s)
    return lo, hi, (lo + hi) / 2.0
