"""Calibration, discrimination and classification measures for binary scores.

Undefined values (zero denominators, empty ECI sides, single-class AUC) are
reported as NaN rather than raised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np
from scipy.stats import rankdata

from .binning import BinPartition, msm_partition
from .core import LOG_LOSS_EPS, BinaryLabeledScores, TrueConditionals, validate_scores

SQRT2 = math.sqrt(2.0)


def _split(data):
    if isinstance(data, BinaryLabeledScores):
        return data.scores.astype(float), data.labels.astype(float)
    scores, labels = data
    return np.asarray(scores, dtype=float), np.asarray(labels, dtype=float)


def brier(data) -> float:
    """Mean of ``(y - p)^2`` over instances."""
    p, y = _split(data)
    return float(np.mean((y - p) ** 2))


def log_loss(data, clip_eps: float = LOG_LOSS_EPS) -> float:
    """Mean negative natural log of the probability given to the true class."""
    p, y = _split(data)
    validate_scores(p, clip_eps)
    # clip the true-class probability itself so both classes hit exactly -ln(eps)
    true_p = np.clip(np.where(y == 1, p, 1.0 - p), clip_eps, 1.0)
    return float(-np.mean(np.log(true_p)))


def spiegelhalter_z(data) -> float:
    r"""Spiegelhalter's calibration statistic.

    .. math::
        Z = \frac{\sum (y_i - p_i)(1 - 2p_i)}{\sqrt{\sum (1 - 2p_i)^2 p_i (1 - p_i)}}

    Returns NaN when the denominator is zero (e.g. every ``p_i`` is 0.5).
    """
    p, y = _split(data)
    num = np.sum((y - p) * (1.0 - 2.0 * p))
    var = np.sum((1.0 - 2.0 * p) ** 2 * p * (1.0 - p))
    if not var > 0:
        return math.nan
    return float(num / math.sqrt(var))


@dataclass(frozen=True)
class ConfusionMetrics:
    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    zero_division: frozenset = field(default_factory=frozenset)


def confusion_metrics(data, threshold: float = 0.5) -> ConfusionMetrics:
    """Threshold the scores (``score > threshold`` predicts 1) and count.

    A metric whose denominator is zero is reported as 0 and its name is added
    to ``zero_division``.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [0, 1]")
    p, y = _split(data)
    pred = p > threshold
    pos = y == 1
    tp = int(np.sum(pred & pos))
    fp = int(np.sum(pred & ~pos))
    tn = int(np.sum(~pred & ~pos))
    fn = int(np.sum(~pred & pos))
    flags = set()

    def ratio(num, den, name):
        if den == 0:
            flags.add(name)
            return 0.0
        return num / den

    precision = ratio(tp, tp + fp, "precision")
    recall = ratio(tp, tp + fn, "recall")
    f1 = ratio(2 * precision * recall, precision + recall, "f1")
    accuracy = (tp + tn) / y.size
    return ConfusionMetrics(tp, fp, tn, fn, accuracy, precision, recall, f1, frozenset(flags))


def auc_roc(data) -> float:
    """Mann-Whitney estimate of the ROC area; ties count one half.

    NaN if only one class is present.
    """
    p, y = _split(data)
    pos = y == 1
    n1 = int(pos.sum())
    n0 = y.size - n1
    if n1 == 0 or n0 == 0:
        return math.nan
    ranks = rankdata(p)
    u = ranks[pos].sum() - n1 * (n1 + 1) / 2.0
    return float(u / (n1 * n0))


def class_ece(scores, labels, complement: bool = False) -> float:
    """Frequency-based ECE of one class on its own MSM partition.

    ``complement=True`` scores the negative class (scores ``1 - s``).
    """
    part = msm_partition(scores, labels, complement)
    n = part.n
    return float(sum(b.size / n * abs(b.obs_freq - b.mean_score) for b in part.bins))


def ece(data) -> float:
    """Sum of the per-class ECEs; class 0 uses scores ``1 - p``."""
    p, y = _split(data)
    return class_ece(p, y) + class_ece(p, y, complement=True)


def eci_local(mean_score: float, obs_freq: float) -> float:
    """Local calibration index of one bin point ``(mean_score, obs_freq)``.

    One minus the point's distance to the diagonal over the largest distance
    attainable at the same mean score. If that largest distance is 0 the
    index is 1 for an on-diagonal point and 0 otherwise.
    """
    d = abs(mean_score - obs_freq) / SQRT2
    extreme = 1.0 if mean_score <= 0.5 else 0.0
    d_max = abs(mean_score - extreme) / SQRT2
    if d_max == 0.0:
        return 1.0 if d == 0.0 else 0.0
    return 1.0 - d / d_max


@dataclass(frozen=True)
class ECISuite:
    local: tuple
    global_: float
    over: float
    under: float
    balance: float


def eci_from_partition(part: BinPartition) -> ECISuite:
    n = part.n
    w = part.sizes / n
    local = np.array([eci_local(b.mean_score, b.obs_freq) for b in part.bins])
    over_mask = part.mean_scores > part.obs_freqs
    under_mask = ~over_mask

    def weighted(mask):
        if not mask.any():
            return math.nan
        return float(np.sum(w[mask] * local[mask]) / np.sum(w[mask]))

    over = weighted(over_mask)
    under = weighted(under_mask)
    return ECISuite(
        local=tuple(float(v) for v in local),
        global_=float(np.sum(w * local) / np.sum(w)),
        over=over,
        under=under,
        balance=over - under,
    )


def eci_suite(data) -> ECISuite:
    p, y = _split(data)
    return eci_from_partition(msm_partition(p, y))


@dataclass(frozen=True)
class TrueCalibrationError:
    mae: float
    mse: float


def true_calibration_error(scores, truth) -> TrueCalibrationError:
    """Mean absolute (and squared) gap between scores and true conditionals."""
    q = truth.q if isinstance(truth, TrueConditionals) else np.asarray(truth, dtype=float)
    s = np.asarray(scores, dtype=float)
    if s.shape != q.shape:
        raise ValueError(f"length mismatch: {s.size} scores, {q.size} true probabilities")
    diff = s - q
    return TrueCalibrationError(float(np.mean(np.abs(diff))), float(np.mean(diff**2)))


@dataclass
class MetricReport:
    """All measures for one benchmark cell, evaluated on its test fold."""

    brier: float
    log_loss: float
    spiegelhalter_z: float
    abs_z: float
    ece: float
    eci_global: float
    eci_over: float
    eci_under: float
    eci_balance: float
    auc_roc: float
    accuracy: float
    precision: float
    recall: float
    f1: float
    precision_undefined: bool
    recall_undefined: bool
    f1_undefined: bool
    true_calibration_mae: float = math.nan
    true_calibration_mse: float = math.nan
    fit_wall_seconds: float = 0.0
    fit_cpu_seconds: float = 0.0
    calibrate_wall_seconds: float = 0.0
    calibrate_cpu_seconds: float = 0.0
    predict_wall_seconds: float = 0.0
    predict_cpu_seconds: float = 0.0
    eci_local: tuple = ()

    @classmethod
    def field_names(cls) -> list:
        return [f.name for f in fields(cls)]


TIMING_FIELDS = (
    "fit_wall_seconds",
    "fit_cpu_seconds",
    "calibrate_wall_seconds",
    "calibrate_cpu_seconds",
    "predict_wall_seconds",
    "predict_cpu_seconds",
)


def evaluate(
    data: BinaryLabeledScores,
    threshold: float = 0.5,
    clip_eps: float = LOG_LOSS_EPS,
    truth=None,
) -> MetricReport:
    """Compute every measure on one test split (timings left at zero)."""
    z = spiegelhalter_z(data)
    cm = confusion_metrics(data, threshold)
    if data.n >= 2:
        e = ece(data)
        suite = eci_suite(data)
    else:
        e = math.nan
        suite = ECISuite((), math.nan, math.nan, math.nan, math.nan)
    report = MetricReport(
        brier=brier(data),
        log_loss=log_loss(data, clip_eps),
        spiegelhalter_z=z,
        abs_z=abs(z),
        ece=e,
        eci_global=suite.global_,
        eci_over=suite.over,
        eci_under=suite.under,
        eci_balance=suite.balance,
        auc_roc=auc_roc(data),
        accuracy=cm.accuracy,
        precision=cm.precision,
        recall=cm.recall,
        f1=cm.f1,
        precision_undefined="precision" in cm.zero_division,
        recall_undefined="recall" in cm.zero_division,
        f1_undefined="f1" in cm.zero_division,
        eci_local=suite.local,
    )
    if truth is not None:
        tce = true_calibration_error(data.scores, truth)
        report.true_calibration_mae = tce.mae
        report.true_calibration_mse = tce.mse
    return report
