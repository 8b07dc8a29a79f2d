"""Benchmark driver: runs the cell grid and writes the report artifacts.

Artifacts in the output directory
---------------------------------
``run.json``              configuration and the expected cell grid
``metrics.csv``           one row per cell
``eci_local.csv``         per-bin local calibration indices of every cell
``deltas.csv``            change of every measure versus the cell's "none" arm
``ranks_x.csv``           ranks of architectures (learner, calibrator) per (dataset, fold)
``expected_ranks_x.csv``  nested-mean ranks of architectures
``ranks_y.csv``           ranks of calibrators by marginal change per (learner, dataset, fold)
``expected_ranks_y.csv``  nested-mean ranks of calibrators
``summary.json``          expected-rank tables and relative-change distributions
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .calibrators import CALIBRATORS
from .core import LOG_LOSS_EPS, RunKey
from .evaluation import (
    HIGHER_BETTER,
    MEASURE_DIRECTIONS,
    CellResult,
    FeatureSource,
    RunConfig,
    ScoreSource,
    build_rank_table,
    delta,
    expected_rank,
    run_cell,
)
from .ingest import ingest_dataset, read_score_file
from .learners import LEARNERS
from .metrics import MetricReport
from .synth import SynthSpec, generate

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
KEY_COLUMNS = ("dataset_id", "fold", "learner_id", "calibrator_id")
REPORT_FIELDS = [f for f in MetricReport.field_names() if f != "eci_local"]
BOOL_FIELDS = {"precision_undefined", "recall_undefined", "f1_undefined"}
RANKED_MEASURES = tuple(MEASURE_DIRECTIONS)
QUANTILES = (5, 25, 50, 75, 95)


def fmt(x) -> str:
    """Serialise a value so that parsing it back is bit-exact."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def parse_float(s: str) -> float:
    return float(s)


# ---------------------------------------------------------------- config


@dataclass
class DatasetRef:
    """A CSV dataset on disk."""

    path: str
    target: str
    positive: str | None = None
    truth_col: str | None = None


@dataclass
class BenchConfig:
    datasets: list = field(default_factory=list)  # DatasetRef
    synth: list = field(default_factory=list)  # SynthSpec
    score_files: list = field(default_factory=list)  # (path, learner_id)
    learners: tuple = LEARNERS
    calibrators: tuple = tuple(CALIBRATORS)
    k: int = 5
    repeats: int = 1
    cal_fraction: float = 0.2
    master_seed: int = 0
    threshold: float = 0.5
    clip_eps: float = LOG_LOSS_EPS
    jobs: int | None = None
    out: str = "calbench-run"

    def validate(self):
        unknown = set(self.learners) - set(LEARNERS)
        if unknown:
            raise ValueError(f"unknown learners {sorted(unknown)}")
        unknown = set(self.calibrators) - set(CALIBRATORS)
        if unknown:
            raise ValueError(f"unknown calibrators {sorted(unknown)}")
        if not (self.datasets or self.synth or self.score_files):
            raise ValueError("no datasets configured")
        if self.k < 2 or self.repeats < 1:
            raise ValueError("need k >= 2 and repeats >= 1")
        if not 0 < self.cal_fraction < 1:
            raise ValueError("cal_fraction must be in (0, 1)")
        if not 0 <= self.threshold <= 1:
            raise ValueError("threshold must be in [0, 1]")
        if not 0 < self.clip_eps < 0.5:
            raise ValueError("clip_eps must be in (0, 0.5)")

    @property
    def run_config(self) -> RunConfig:
        return RunConfig(
            self.k, self.repeats, self.cal_fraction, self.master_seed, self.threshold, self.clip_eps
        )

    def to_json(self) -> dict:
        d = asdict(self)
        d["synth"] = [asdict(s) for s in self.synth]
        d["learners"] = list(self.learners)
        d["calibrators"] = list(self.calibrators)
        d["score_files"] = [list(s) for s in self.score_files]
        return d


def load_sources(config: BenchConfig) -> list:
    sources = []
    for ref in config.datasets:
        table, truth = ingest_dataset(ref.path, ref.target, ref.positive, ref.truth_col)
        sources.append(FeatureSource(table, truth))
    for spec in config.synth:
        table, truth = generate(spec)
        sources.append(FeatureSource(table, truth))
    for path, learner_id in config.score_files:
        sources.extend(read_score_file(path, learner_id))
    ids = [s.dataset_id for s in sources if isinstance(s, FeatureSource)]
    if len(ids) != len(set(ids)):
        raise ValueError(f"duplicate dataset ids: {ids}")
    return sources


def grid(config: BenchConfig, sources) -> list:
    arms = ("none", *config.calibrators)
    keys = []
    for src in sources:
        if isinstance(src, ScoreSource):
            folds, learners = sorted(src.splits), (src.learner_id,)
        else:
            folds, learners = range(1, config.k * config.repeats + 1), config.learners
        for fold in folds:
            for learner in learners:
                for arm in arms:
                    keys.append(RunKey(src.dataset_id, int(fold), learner, arm))
    return sorted(keys)


# ---------------------------------------------------------------- execution

_WORKER = {}


def _init_worker(sources, run_config):
    _WORKER["sources"] = sources
    _WORKER["config"] = run_config


def _source_for(key, sources):
    for s in sources:
        if s.dataset_id == key.dataset_id and (
            not isinstance(s, ScoreSource) or s.learner_id == key.learner_id
        ):
            return s
    raise KeyError(key)


def _run_task(key):
    sources = _WORKER["sources"]
    return run_cell(key, _source_for(key, sources), _WORKER["config"])


def execute(keys, sources, run_config: RunConfig, jobs: int | None = None) -> list:
    """Run every cell; results come back sorted by key whatever the completion order."""
    jobs = jobs or os.cpu_count() or 1
    if jobs <= 1 or len(keys) <= 1:
        _init_worker(sources, run_config)
        results = [_run_task(k) for k in keys]
    else:
        with ProcessPoolExecutor(jobs, initializer=_init_worker, initargs=(sources, run_config)) as ex:
            results = list(ex.map(_run_task, keys, chunksize=max(1, len(keys) // (4 * jobs))))
    return sorted(results, key=lambda r: r.key)


def run_benchmark(config: BenchConfig) -> int:
    """Run the configured grid, write all artifacts, return the exit code (0 iff no cell failed)."""
    config.validate()
    sources = load_sources(config)
    keys = grid(config, sources)
    log.info("running %d cells", len(keys))
    results = execute(keys, sources, config.run_config, config.jobs)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "run.json").open("w") as fh:
        json.dump(
            {
                "schema_version": SCHEMA_VERSION,
                "config": config.to_json(),
                "cells": [list(_key_tuple(k)) for k in keys],
            },
            fh,
            indent=2,
        )
    write_metrics(out / "metrics.csv", results)
    write_eci_local(out / "eci_local.csv", results)
    emit_report(out)
    failed = [r for r in results if not r.ok]
    for r in failed:
        log.warning("cell %s failed: %s", r.key, r.error)
    return 1 if failed else 0


# ---------------------------------------------------------------- metrics file


def _key_tuple(key: RunKey):
    return key.dataset_id, key.fold, key.learner_id, key.calibrator_id


def write_metrics(path, results):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*KEY_COLUMNS, "status", "error", *REPORT_FIELDS])
        for r in results:
            row = [*map(fmt, _key_tuple(r.key)), "ok" if r.ok else "failed", r.error]
            if r.ok:
                row += [fmt(getattr(r.report, f)) for f in REPORT_FIELDS]
            else:
                row += [""] * len(REPORT_FIELDS)
            w.writerow(row)


def read_metrics(path) -> list:
    results = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            key = RunKey(row["dataset_id"], int(row["fold"]), row["learner_id"], row["calibrator_id"])
            if row["status"] != "ok":
                results.append(CellResult(key, None, row["error"]))
                continue
            values = {
                f: (row[f] == "true") if f in BOOL_FIELDS else parse_float(row[f]) for f in REPORT_FIELDS
            }
            results.append(CellResult(key, MetricReport(**values)))
    return results


def write_eci_local(path, results):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*KEY_COLUMNS, "bin", "eci_local"])
        for r in results:
            if r.ok:
                for b, v in enumerate(r.report.eci_local, start=1):
                    w.writerow([*map(fmt, _key_tuple(r.key)), b, fmt(v)])


# ---------------------------------------------------------------- deltas and ranks


def compute_deltas(results) -> list:
    """One entry per calibrated cell whose "none" arm also succeeded."""
    by_key = {r.key: r for r in results}
    rows = []
    for r in results:
        if r.key.calibrator_id == "none" or not r.ok:
            continue
        base = by_key.get(RunKey(r.key.dataset_id, r.key.fold, r.key.learner_id, "none"))
        if base is None or not base.ok:
            continue
        rows.append(
            (r.key, {m: delta(m, getattr(base.report, m), getattr(r.report, m), r.key) for m in RANKED_MEASURES})
        )
    return rows


def write_deltas(path, delta_rows):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        cols = [f"{m}_{part}" for m in RANKED_MEASURES for part in ("marginal", "relative")]
        w.writerow([*KEY_COLUMNS, *cols])
        for key, d in delta_rows:
            vals = [fmt(getattr(d[m], part)) for m in RANKED_MEASURES for part in ("marginal", "relative_pct")]
            w.writerow([*map(fmt, _key_tuple(key)), *vals])


def x_rank_tables(results) -> dict:
    tables = {}
    for m in RANKED_MEASURES:
        values = defaultdict(dict)
        for r in results:
            ctx = (r.key.dataset_id, r.key.fold)
            values[ctx][(r.key.learner_id, r.key.calibrator_id)] = (
                getattr(r.report, m) if r.ok else math.nan
            )
        tables[m] = build_rank_table(m, MEASURE_DIRECTIONS[m], ("dataset", "fold"), values)
    return tables


def y_rank_tables(delta_rows, results=()) -> dict:
    tables = {}
    for m in RANKED_MEASURES:
        values = defaultdict(dict)
        for key, d in delta_rows:
            values[(key.learner_id, key.dataset_id, key.fold)][key.calibrator_id] = d[m].marginal
        for r in results:
            # calibrated cells with no usable delta are recorded as exclusions
            if r.key.calibrator_id != "none":
                ctx = (r.key.learner_id, r.key.dataset_id, r.key.fold)
                values[ctx].setdefault(r.key.calibrator_id, math.nan)
        tables[m] = build_rank_table(m, MEASURE_DIRECTIONS[m], ("learner", "dataset", "fold"), values)
    return tables


def write_rank_table(path, tables: dict, key_names, entity_names):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["measure", *key_names, *entity_names, "value", "rank"])
        for m, t in tables.items():
            for ctx in sorted(t.ranks):
                for ent in sorted(t.ranks[ctx]):
                    parts = ent if isinstance(ent, tuple) else (ent,)
                    w.writerow([m, *map(fmt, ctx), *parts, fmt(t.values[ctx][ent]), t.ranks[ctx][ent]])


def write_expected(path, expected: dict, entity_names):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["measure", *entity_names, "expected_rank"])
        for m, row in expected.items():
            for ent in sorted(row):
                parts = ent if isinstance(ent, tuple) else (ent,)
                w.writerow([m, *parts, fmt(row[ent])])


def change_distribution(relatives, direction: str) -> dict:
    """Counts of improved/degraded cells and quantiles of relative changes (percent)."""
    rel = np.array([v for v in relatives if not math.isnan(v)], dtype=float)
    improved_sign = 1.0 if direction == HIGHER_BETTER else -1.0
    n = int(rel.size)
    out = {
        "count": len(relatives),
        "defined": n,
        "improved": int(np.sum(rel * improved_sign > 0)),
        "degraded": int(np.sum(rel * improved_sign < 0)),
        "unchanged": int(np.sum(rel == 0)),
    }
    out["fraction_improved"] = out["improved"] / n if n else None
    out["mean"] = float(rel.mean()) if n else None
    out["quantiles"] = (
        {str(q): float(v) for q, v in zip(QUANTILES, np.percentile(rel, QUANTILES))} if n else None
    )
    return out


class IncompleteRunError(ValueError):
    def __init__(self, missing):
        self.missing = missing
        super().__init__(f"run directory is missing {len(missing)} cells, e.g. {missing[:5]}")


def _clean(obj):
    if isinstance(obj, float) and math.isnan(obj):
        return None
    if isinstance(obj, dict):
        return {str(k) if not isinstance(k, tuple) else "/".join(map(str, k)): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def emit_report(run_dir) -> Path:
    """Rebuild delta/rank tables from ``metrics.csv`` and write ``summary.json``."""
    run_dir = Path(run_dir)
    meta_path = run_dir / "run.json"
    metrics_path = run_dir / "metrics.csv"
    if not meta_path.exists() or not metrics_path.exists():
        raise IncompleteRunError([str(p.name) for p in (meta_path, metrics_path) if not p.exists()])
    meta = json.loads(meta_path.read_text())
    results = read_metrics(metrics_path)
    have = {_key_tuple(r.key) for r in results}
    missing = [tuple(c) for c in meta["cells"] if tuple(c) not in have]
    if missing:
        raise IncompleteRunError(missing)

    delta_rows = compute_deltas(results)
    write_deltas(run_dir / "deltas.csv", delta_rows)
    xt = x_rank_tables(results)
    yt = y_rank_tables(delta_rows, results)
    write_rank_table(run_dir / "ranks_x.csv", xt, ("dataset_id", "fold"), ("learner_id", "calibrator_id"))
    write_rank_table(
        run_dir / "ranks_y.csv", yt, ("learner_id", "dataset_id", "fold"), ("calibrator_id",)
    )
    ex = {m: expected_rank(t, allow_missing=True) for m, t in xt.items()}
    ey = {m: expected_rank(t, allow_missing=True) for m, t in yt.items()}
    write_expected(run_dir / "expected_ranks_x.csv", ex, ("learner_id", "calibrator_id"))
    write_expected(run_dir / "expected_ranks_y.csv", ey, ("calibrator_id",))

    calibrators = sorted({k.calibrator_id for k, _ in delta_rows})
    changes = {
        m: {
            c: change_distribution(
                [d[m].relative_pct for k, d in delta_rows if k.calibrator_id == c], MEASURE_DIRECTIONS[m]
            )
            for c in calibrators
        }
        for m in RANKED_MEASURES
    }
    failed = [list(_key_tuple(r.key)) + [r.error] for r in results if not r.ok]
    summary = {
        "schema_version": SCHEMA_VERSION,
        "n_cells": len(results),
        "n_failed": len(failed),
        "failed_cells": failed,
        "n_delta_rows": len(delta_rows),
        "directions": dict(MEASURE_DIRECTIONS),
        "expected_rank_architecture": ex,
        "expected_rank_calibrator": ey,
        "relative_change": changes,
        "rank_exclusions": {
            "architecture": {m: [list(c) + list(e) for c, e in t.excluded] for m, t in xt.items() if t.excluded},
            "calibrator": {m: [list(c) + [e] for c, e in t.excluded] for m, t in yt.items() if t.excluded},
        },
    }
    path = run_dir / "summary.json"
    path.write_text(json.dumps(_clean(summary), indent=2, allow_nan=False))
    return path
