"""Isotonic calibration by pool-adjacent-violators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import BinaryLabeledScores


def pav(y, w=None) -> np.ndarray:
    """Weighted least-squares non-decreasing fit of ``y`` (in the given order).

    Parameters
    ----------
    y : array_like, shape (n,)
        Targets, already sorted by the covariate.
    w : array_like, shape (n,), optional
        Positive weights; defaults to ones.

    Returns
    -------
    ndarray, shape (n,)
        The fitted non-decreasing vector.
    """
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if w is None else np.asarray(w, dtype=float)
    # block stack: weighted sum, weight, number of elements
    sums: list[float] = []
    weights: list[float] = []
    counts: list[int] = []
    for yi, wi in zip(y, w):
        s, ww, c = yi * wi, wi, 1
        while sums and sums[-1] / weights[-1] > s / ww:
            s += sums.pop()
            ww += weights.pop()
            c += counts.pop()
        sums.append(s)
        weights.append(ww)
        counts.append(c)
    return np.repeat(np.divide(sums, weights), counts)


def merge_ties(scores, labels):
    """Collapse equal scores into weighted points.

    Returns ``(unique_scores, label_sums, counts)`` sorted by score.
    """
    scores = np.asarray(scores, dtype=float)
    xs, inverse, counts = np.unique(scores, return_inverse=True, return_counts=True)
    sums = np.bincount(inverse, weights=np.asarray(labels, dtype=float), minlength=xs.size)
    return xs, sums, counts.astype(float)


def isotonic_fit_values(scores, labels) -> np.ndarray:
    """Per-instance fitted values of the isotonic fit, in input order."""
    scores = np.asarray(scores, dtype=float)
    xs, sums, counts = merge_ties(scores, labels)
    fitted = pav(sums / counts, counts)
    return fitted[np.searchsorted(xs, scores)]


@dataclass(frozen=True, eq=False)
class IsotonicModel:
    """Knots of a monotone calibration map.

    ``boundaries`` holds the first and last distinct calibration score of
    every pooled block; queries interpolate linearly between knots and are
    clamped outside them.
    """

    boundaries: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.boundaries, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if b.size == 0 or b.shape != v.shape:
            raise ValueError("isotonic model needs matching, non-empty knots")
        if np.any(np.diff(b) <= 0):
            raise ValueError("boundaries must be strictly increasing")
        if np.any(np.diff(v) < 0):
            raise ValueError("values must be non-decreasing")
        object.__setattr__(self, "boundaries", b)
        object.__setattr__(self, "values", v)

    def predict(self, s):
        return np.interp(s, self.boundaries, self.values)


def fit_isotonic(cal: BinaryLabeledScores) -> IsotonicModel:
    xs, sums, counts = merge_ties(cal.scores, cal.labels)
    fitted = np.clip(pav(sums / counts, counts), 0.0, 1.0)
    # keep the first and last knot of each constant run
    change = np.flatnonzero(np.diff(fitted) != 0)
    keep = np.unique(np.concatenate(([0, xs.size - 1], change, change + 1)))
    return IsotonicModel(xs[keep], fitted[keep])


def apply_isotonic(model: IsotonicModel, s):
    if model.boundaries.size == 0:
        raise ValueError("empty isotonic model")
    return model.predict(s)
