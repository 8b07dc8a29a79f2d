"""Cross-validation protocol, change measures and rank aggregation."""

from __future__ import annotations

import math
import time
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .calibrators import fit_calibrator
from .core import LOG_LOSS_EPS, BinaryLabeledScores, DatasetTable, RunKey, derive_task_seed
from .learners import fit_learner, predict_scores
from .metrics import MetricReport, evaluate

LOWER_BETTER = "lower"
HIGHER_BETTER = "higher"

MEASURE_DIRECTIONS = {
    "log_loss": LOWER_BETTER,
    "brier": LOWER_BETTER,
    "abs_z": LOWER_BETTER,
    "ece": LOWER_BETTER,
    "eci_global": HIGHER_BETTER,
    "auc_roc": HIGHER_BETTER,
    "accuracy": HIGHER_BETTER,
    "precision": HIGHER_BETTER,
    "recall": HIGHER_BETTER,
    "f1": HIGHER_BETTER,
    "true_calibration_mae": LOWER_BETTER,
    "fit_wall_seconds": LOWER_BETTER,
    "fit_cpu_seconds": LOWER_BETTER,
    "calibrate_wall_seconds": LOWER_BETTER,
    "calibrate_cpu_seconds": LOWER_BETTER,
    "predict_wall_seconds": LOWER_BETTER,
    "predict_cpu_seconds": LOWER_BETTER,
}


# ---------------------------------------------------------------- splitting


@dataclass(frozen=True, eq=False)
class FoldAssignment:
    fold_of: np.ndarray  # fold id in 1..k per instance
    k: int

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != fold)


def stratified_kfold(labels, k: int = 5, seed: int = 0, allow_degenerate: bool = False) -> FoldAssignment:
    """Shuffle each class with ``seed`` and deal it round-robin into ``k`` folds.

    Dealing continues across classes from the fold where the previous class
    stopped, so total fold sizes also differ by at most one.
    """
    labels = np.asarray(labels)
    if k < 2:
        raise ValueError("k must be at least 2")
    rng = np.random.default_rng(seed)
    fold_of = np.zeros(labels.size, dtype=int)
    offset = 0
    for c in (0, 1):
        members = np.flatnonzero(labels == c)
        if 0 < members.size < k and not allow_degenerate:
            raise ValueError(f"class {c} has {members.size} members, fewer than k={k}")
        members = rng.permutation(members)
        fold_of[members] = (offset + np.arange(members.size)) % k + 1
        offset = (offset + members.size) % k
    return FoldAssignment(fold_of, k)


def holdout_calibration_split(train_indices, labels, fraction: float = 0.2, seed: int = 0):
    """Stratified split of ``train_indices`` into ``(fit_indices, cal_indices)``.

    Each class contributes ``round(fraction * class_count)`` instances to the
    calibration part.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must be in (0, 1)")
    train_indices = np.asarray(train_indices)
    y = np.asarray(labels)[train_indices]
    rng = np.random.default_rng(seed)
    fit, cal = [], []
    for c in (0, 1):
        members = train_indices[y == c]
        if members.size == 0:
            raise ValueError(f"class {c} is absent from the training indices")
        n_cal = int(round(fraction * members.size))
        if n_cal == 0:
            raise ValueError(f"class {c} would get an empty calibration share")
        members = rng.permutation(members)
        cal.append(members[:n_cal])
        fit.append(members[n_cal:])
    return np.sort(np.concatenate(fit)), np.sort(np.concatenate(cal))


# ---------------------------------------------------------------- cells


@dataclass(frozen=True)
class RunConfig:
    k: int = 5
    repeats: int = 1
    cal_fraction: float = 0.2
    master_seed: int = 0
    threshold: float = 0.5
    clip_eps: float = LOG_LOSS_EPS

    @property
    def n_folds(self) -> int:
        return self.k * self.repeats


@dataclass(frozen=True, eq=False)
class FeatureSource:
    """A dataset whose scores come from one of the built-in learners."""

    table: DatasetTable
    truth: object = None  # TrueConditionals or None

    @property
    def dataset_id(self):
        return self.table.dataset_id

    @property
    def labels(self):
        return self.table.labels


@dataclass(frozen=True, eq=False)
class ScoreSource:
    """Precomputed scores of an external model, per fold and split.

    ``splits[fold]`` maps ``"fit"``, ``"cal"`` and ``"test"`` to
    ``(row_ids, labels, scores)`` arrays. The "none" arm is scored with the
    same per-fold model as the calibrated arms.
    """

    dataset_id: str
    learner_id: str
    splits: Mapping


def fold_assignment(labels, dataset_id: str, config: RunConfig, repeat: int) -> FoldAssignment:
    seed = derive_task_seed(config.master_seed, f"folds|{dataset_id}|repeat={repeat}")
    return stratified_kfold(labels, config.k, seed)


def cell_indices(source: FeatureSource, key: RunKey, config: RunConfig):
    """Return ``(train, fit, cal, test)`` indices for a feature-based cell."""
    if not 1 <= key.fold <= config.n_folds:
        raise ValueError(f"fold {key.fold} outside 1..{config.n_folds}")
    repeat, local = divmod(key.fold - 1, config.k)
    folds = fold_assignment(source.labels, source.dataset_id, config, repeat)
    train = folds.train_indices(local + 1)
    test = folds.test_indices(local + 1)
    split_seed = derive_task_seed(config.master_seed, f"holdout|{source.dataset_id}|fold={key.fold}")
    fit, cal = holdout_calibration_split(train, source.labels, config.cal_fraction, split_seed)
    return train, fit, cal, test


class _Timer:
    def __enter__(self):
        self.wall = time.perf_counter()
        self.cpu = time.thread_time()
        return self

    def __exit__(self, *exc):
        self.wall = time.perf_counter() - self.wall
        self.cpu = time.thread_time() - self.cpu
        return False


@dataclass
class CellResult:
    key: RunKey
    report: MetricReport | None = None
    error: str = ""
    indices: dict = field(default_factory=dict, repr=False)

    @property
    def ok(self) -> bool:
        return self.report is not None


def run_cell(key: RunKey, source, config: RunConfig, keep_indices: bool = False) -> CellResult:
    """Run one (dataset, fold, learner, calibrator) cell; failures are captured, not raised."""
    try:
        if isinstance(source, ScoreSource):
            return _run_score_cell(key, source, config)
        return _run_feature_cell(key, source, config, keep_indices)
    except Exception as exc:  # recorded per cell so the grid keeps going
        return CellResult(key, None, f"{type(exc).__name__}: {exc}")


def _run_feature_cell(key, source: FeatureSource, config, keep_indices):
    train, fit, cal, test = cell_indices(source, key, config)
    table = source.table
    learner_key = RunKey(key.dataset_id, key.fold, key.learner_id, "learner")
    seed = derive_task_seed(config.master_seed, learner_key)
    calibrate = key.calibrator_id != "none"
    fit_rows = fit if calibrate else train

    with _Timer() as t_fit:
        model = fit_learner(key.learner_id, table.take(fit_rows), seed)
    t_cal = None
    calibrator = None
    if calibrate:
        with _Timer() as t_cal:
            cal_scores = predict_scores(model, table.rows[cal])
            calibrator = fit_calibrator(
                key.calibrator_id, BinaryLabeledScores(cal_scores, table.labels[cal])
            )
    with _Timer() as t_pred:
        scores = predict_scores(model, table.rows[test])
        if calibrator is not None:
            scores = np.clip(calibrator.predict(scores), 0.0, 1.0)

    truth = None if source.truth is None else source.truth.q[test]
    report = evaluate(
        BinaryLabeledScores(scores, table.labels[test]), config.threshold, config.clip_eps, truth
    )
    _stamp(report, t_fit, t_cal, t_pred)
    indices = {}
    if keep_indices:
        indices = {"train": train, "fit": fit_rows, "cal": cal if calibrate else train[:0], "test": test}
    return CellResult(key, report, "", indices)


def _run_score_cell(key, source: ScoreSource, config):
    splits = source.splits[key.fold]
    _, test_y, test_s = splits["test"]
    t_cal = None
    calibrator = None
    if key.calibrator_id != "none":
        _, cal_y, cal_s = splits["cal"]
        with _Timer() as t_cal:
            calibrator = fit_calibrator(key.calibrator_id, BinaryLabeledScores(cal_s, cal_y))
    with _Timer() as t_pred:
        scores = np.asarray(test_s, dtype=float)
        if calibrator is not None:
            scores = np.clip(calibrator.predict(scores), 0.0, 1.0)
    report = evaluate(BinaryLabeledScores(scores, test_y), config.threshold, config.clip_eps)
    _stamp(report, None, t_cal, t_pred)
    return CellResult(key, report)


def _stamp(report, t_fit, t_cal, t_pred):
    for prefix, t in (("fit", t_fit), ("calibrate", t_cal), ("predict", t_pred)):
        if t is not None:
            setattr(report, f"{prefix}_wall_seconds", t.wall)
            setattr(report, f"{prefix}_cpu_seconds", t.cpu)


# ---------------------------------------------------------------- deltas


@dataclass(frozen=True)
class DeltaRecord:
    measure: str
    base: float
    calibrated: float
    marginal: float
    relative_pct: float  # NaN when the base value is 0
    key: RunKey | None = None

    @property
    def relative_defined(self) -> bool:
        return not math.isnan(self.relative_pct)


def delta(measure: str, base: float, calibrated: float, key: RunKey | None = None) -> DeltaRecord:
    """Marginal change ``calibrated - base`` and signed relative change in percent."""
    marginal = calibrated - base
    if marginal == 0:
        relative = 0.0
    elif base == 0 or math.isnan(marginal):
        relative = math.nan
    else:
        relative = math.copysign(abs(marginal / base) * 100.0, marginal)
    return DeltaRecord(measure, base, calibrated, marginal, relative, key)


# ---------------------------------------------------------------- ranks


def _better(direction):
    if direction == LOWER_BETTER:
        return lambda a, b: a < b
    if direction == HIGHER_BETTER:
        return lambda a, b: a > b
    raise ValueError(f"unknown direction {direction!r}")


def rank_within(values, direction: str = LOWER_BETTER) -> list:
    """Competition ranks: 1 + number of strictly better values; ties share a rank."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("cannot rank an empty list")
    if np.isnan(v).any():
        raise ValueError("NaN values must be excluded before ranking")
    better = _better(direction)
    return [int(1 + np.sum(better(v, x))) for x in v]


@dataclass
class RankTable:
    """Per-context competition ranks of a set of entities for one measure.

    ``ranks[context][entity]``; contexts are tuples such as ``(dataset, fold)``
    or ``(learner, dataset, fold)``. ``excluded`` lists ``(context, entity)``
    pairs left out because the value was missing or undefined.
    """

    measure: str
    direction: str
    levels: tuple
    ranks: dict
    values: dict
    excluded: list = field(default_factory=list)

    @property
    def entities(self):
        return sorted({e for row in self.ranks.values() for e in row})


def build_rank_table(measure, direction, levels, values: Mapping) -> RankTable:
    """Rank entities within each context; NaN or missing values are excluded."""
    ranks, kept, excluded = {}, {}, []
    for ctx in sorted(values):
        row = values[ctx]
        good = {e: v for e, v in row.items() if v is not None and not math.isnan(v)}
        excluded.extend((ctx, e) for e in sorted(set(row) - set(good)))
        if not good:
            continue
        ents = sorted(good)
        r = rank_within([good[e] for e in ents], direction)
        ranks[ctx] = dict(zip(ents, r))
        kept[ctx] = good
    return RankTable(measure, direction, tuple(levels), ranks, kept, excluded)


class MissingCellsError(ValueError):
    def __init__(self, missing):
        self.missing = missing
        super().__init__(f"{len(missing)} missing rank cells, e.g. {missing[:5]}")


def expected_rank(table: RankTable, entities=None, grid=None, allow_missing: bool = False) -> dict:
    """Nested mean of each entity's ranks, innermost context level first.

    With a complete, uniform table this is the grand mean of the ranks. The
    full context grid defaults to the contexts present in the table; a cell
    an entity lacks raises :class:`MissingCellsError` unless ``allow_missing``,
    in which case the nested means run over what is present.
    """
    entities = table.entities if entities is None else list(entities)
    contexts = sorted(table.ranks) if grid is None else sorted(grid)
    missing = [
        (ctx, e) for ctx in contexts for e in entities if e not in table.ranks.get(ctx, {})
    ]
    if missing and not allow_missing:
        raise MissingCellsError(missing)
    out = {}
    for e in entities:
        cells = {ctx: table.ranks[ctx][e] for ctx in contexts if e in table.ranks.get(ctx, {})}
        out[e] = _nested_mean(cells, len(table.levels)) if cells else math.nan
    return out


def _nested_mean(cells: dict, depth: int) -> float:
    level = dict(cells)
    for _ in range(depth):
        groups = defaultdict(list)
        for ctx, v in level.items():
            groups[ctx[:-1]].append(v)
        level = {ctx: float(np.mean(vs)) for ctx, vs in groups.items()}
    (value,) = level.values()
    return value
