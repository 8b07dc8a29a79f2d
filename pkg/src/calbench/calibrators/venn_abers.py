"""Inductive Venn-Abers predictor.

For a test score ``s`` the calibration set is augmented with ``(s, 0)`` and
with ``(s, 1)``; the two isotonic fits evaluated at ``s`` give ``p0`` and
``p1``. The augmented fit only depends on where ``s`` falls among the
distinct calibration scores (inside a gap, or tied with one of them), so all
``2k + 1`` cases are solved once at fit time. Each case is solved exactly:
the PAV blocks of the calibration points left of ``s`` and right of ``s``
are never split by the insertion, so the block containing the test point is
found by pooling it with neighbouring blocks until no violation remains.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import BinaryLabeledScores, CalibrationFitError
from .isotonic import merge_ties


class _Block:
    __slots__ = ("s", "w", "nxt")

    def __init__(self, s, w, nxt):
        self.s = s
        self.w = w
        self.nxt = nxt


def _prefix_stacks(sums, counts):
    """Top block of the PAV stack after each prefix; tops[j] covers points < j."""
    tops = [None]
    top = None
    for s, w in zip(sums, counts):
        while top is not None and top.s * w > s * top.w:
            s += top.s
            w += top.w
            top = top.nxt
        top = _Block(s, w, top)
        tops.append(top)
    return tops


def _suffix_stacks(sums, counts):
    """Leftmost block of the PAV solution of each suffix; tops[j] covers points >= j."""
    k = len(sums)
    tops = [None] * (k + 1)
    top = None
    for j in range(k - 1, -1, -1):
        s, w = sums[j], counts[j]
        while top is not None and s * top.w > top.s * w:
            s += top.s
            w += top.w
            top = top.nxt
        top = _Block(s, w, top)
        tops[j] = top
    return tops


def _pooled_value(s, w, left, right):
    while True:
        if left is not None and left.s * w > s * left.w:
            s += left.s
            w += left.w
            left = left.nxt
        elif right is not None and s * right.w > right.s * w:
            s += right.s
            w += right.w
            right = right.nxt
        else:
            return s / w


def _case_tables(sums, counts, label):
    sums = [float(v) for v in sums]
    counts = [float(v) for v in counts]
    k = len(sums)
    pre = _prefix_stacks(sums, counts)
    suf = _suffix_stacks(sums, counts)
    gap = np.array([_pooled_value(label, 1.0, pre[g], suf[g]) for g in range(k + 1)])
    tie = np.array(
        [_pooled_value(sums[t] + label, counts[t] + 1.0, pre[t], suf[t + 1]) for t in range(k)]
    )
    return gap, tie


def point_estimate(p0, p1):
    """Merge the Venn-Abers pair into one probability, ``p1 / (1 - p0 + p1)``.

    The denominator vanishes only at ``p0 = 1, p1 = 0``; 0.5 is returned there.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    den = 1.0 - p0 + p1
    safe = np.where(den > 0, den, 1.0)
    return np.where(den > 0, p1 / safe, 0.5)


@dataclass(frozen=True, eq=False)
class VennAbersModel:
    cal: BinaryLabeledScores
    _xs: np.ndarray = field(init=False, repr=False)
    _tables: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if not self.cal.has_both_classes:
            raise CalibrationFitError("Venn-Abers needs both classes in the calibration set")
        xs, sums, counts = merge_ties(self.cal.scores, self.cal.labels)
        object.__setattr__(self, "_xs", xs)
        object.__setattr__(
            self, "_tables", (_case_tables(sums, counts, 0.0), _case_tables(sums, counts, 1.0))
        )

    def interval(self, s):
        """Return ``(p0, p1)`` for each query score."""
        s = np.asarray(s, dtype=float)
        xs = self._xs
        idx = np.searchsorted(xs, s, side="left")
        tied = (idx < xs.size) & (xs[np.minimum(idx, xs.size - 1)] == s)
        out = []
        for gap, tie in self._tables:
            out.append(np.where(tied, tie[np.minimum(idx, xs.size - 1)], gap[idx]))
        return out[0], out[1]

    def predict(self, s):
        return point_estimate(*self.interval(s))


def fit_venn_abers(cal: BinaryLabeledScores) -> VennAbersModel:
    return VennAbersModel(cal)


def apply_venn_abers(model: VennAbersModel, s):
    """Return ``(p0, p1, point)`` for the query score(s)."""
    p0, p1 = model.interval(s)
    return p0, p1, point_estimate(p0, p1)
