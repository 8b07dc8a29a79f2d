"""Equal-mass score binning with a monotonic sweep over the bin count (MSM)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_MONOTONE_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class Bin:
    member_indices: np.ndarray
    mean_score: float
    obs_freq: float

    @property
    def size(self) -> int:
        return int(self.member_indices.size)


@dataclass(frozen=True, eq=False)
class BinPartition:
    bins: tuple

    @property
    def n(self) -> int:
        return sum(b.size for b in self.bins)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([b.size for b in self.bins])

    @property
    def mean_scores(self) -> np.ndarray:
        return np.array([b.mean_score for b in self.bins])

    @property
    def obs_freqs(self) -> np.ndarray:
        return np.array([b.obs_freq for b in self.bins])

    def __len__(self):
        return len(self.bins)


def _tie_group_rates(sorted_scores, sorted_labels):
    """Replace each label by the positive rate of its tie group."""
    _, start, counts = np.unique(sorted_scores, return_index=True, return_counts=True)
    rates = np.add.reduceat(sorted_labels.astype(float), start) / counts
    return np.repeat(rates, counts)


def _bin_stats(sorted_keys, sorted_scores, rates, starts, ends):
    sizes = ends - starts
    mean_score = np.add.reduceat(sorted_scores, starts) / sizes
    obs = np.add.reduceat(rates, starts) / sizes
    # bins inside one tie group report that group's score and rate exactly
    single = sorted_keys[starts] == sorted_keys[ends - 1]
    mean_score[single] = sorted_scores[starts[single]]
    obs[single] = rates[starts[single]]
    return mean_score, obs


def equal_mass_bounds(n: int, b: int):
    sizes = np.full(b, n // b)
    sizes[: n % b] += 1
    ends = np.cumsum(sizes)
    return ends - sizes, ends


def msm_partition(scores, labels, complement: bool = False) -> BinPartition:
    """Equal-mass partition with the largest monotone bin count.

    Candidate counts run from ``ceil(sqrt(N))`` down to 2; the first whose
    per-bin observed frequencies are non-decreasing is kept. 2 is used if
    none is, and also when every score is identical. Instances are ordered
    by score, then input index. Tied scores may straddle a bin edge; each
    tied instance then contributes its tie group's positive rate, so the
    result does not depend on input order.

    With ``complement=True`` the partition is built for the other class,
    i.e. on scores ``1 - s`` and labels ``1 - y``. Bin statistics are then
    taken as ``1 -`` the positive-class statistics of the same members, so
    both classes see bit-identical gaps ``|obs_freq - mean_score|``.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    n = scores.size
    if n < 2:
        raise ValueError("binning needs at least two instances")
    if labels.size != n:
        raise ValueError("scores and labels differ in length")
    keys = 1.0 - scores if complement else scores
    order = np.argsort(keys, kind="stable")
    k_sorted = keys[order]
    s_sorted = scores[order]
    rates = _tie_group_rates(k_sorted, labels[order])

    # a single distinct score carries no resolution to sweep over
    b_max = 2 if k_sorted[0] == k_sorted[-1] else max(2, math.ceil(math.sqrt(n)))
    for b in range(b_max, 1, -1):
        starts, ends = equal_mass_bounds(n, b)
        mean_score, obs = _bin_stats(k_sorted, s_sorted, rates, starts, ends)
        if complement:
            mean_score, obs = 1.0 - mean_score, 1.0 - obs
        if b == 2 or np.all(np.diff(obs) >= -_MONOTONE_SLACK):
            break
    bins = tuple(
        Bin(order[st:en], float(ms), float(ob))
        for st, en, ms, ob in zip(starts, ends, mean_score, obs)
    )
    return BinPartition(bins)
