"""Delimited-text ingestion: feature datasets, external score files, synthetic dumps."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from pathlib import Path

import numpy as np

from .core import DatasetTable, TrueConditionals
from .evaluation import ScoreSource

MISSING_TOKENS = frozenset({"", "na", "n/a", "nan", "null", "none", "?"})
SCORE_FILE_COLUMNS = ("dataset_id", "fold", "split", "row_id", "label", "score")
SPLITS = ("fit", "cal", "test")


class IngestError(ValueError):
    pass


def is_missing(value) -> bool:
    return value is None or value.strip().lower() in MISSING_TOKENS


def parse_real(value) -> float:
    """Parse a real number; missing, unparseable or non-finite values become 0."""
    if is_missing(value):
        return 0.0
    try:
        x = float(value)
    except ValueError:
        return 0.0
    return x if math.isfinite(x) else 0.0


def _parses(value) -> bool:
    try:
        return math.isfinite(float(value))
    except ValueError:
        return False


def looks_numeric(column) -> bool:
    """At least half of the non-missing entries parse as finite reals."""
    present = [v for v in column if not is_missing(v)]
    if not present:
        return True
    return 2 * sum(_parses(v) for v in present) >= len(present)


def encode_categorical(column) -> np.ndarray:
    """Dense integer codes in order of first appearance; missing entries form one group."""
    codes = {}
    out = np.empty(len(column), dtype=float)
    for i, v in enumerate(column):
        token = None if is_missing(v) else v
        out[i] = codes.setdefault(token, len(codes))
    return out


def _read_rows(path):
    path = Path(path)
    with path.open(newline="") as fh:
        sample = fh.read(4096)
        fh.seek(0)
        try:
            dialect = csv.Sniffer().sniff(sample, delimiters=",;\t|")
        except csv.Error:
            dialect = csv.excel
        reader = csv.reader(fh, dialect)
        header = next(reader, None)
        if header is None:
            raise IngestError(f"{path} is empty")
        header = [h.strip() for h in header]
        rows = [r for r in reader if any(c.strip() for c in r)]
    if not rows:
        raise IngestError(f"{path} has a header but no data rows")
    width = len(header)
    rows = [(r + [""] * width)[:width] for r in rows]
    return header, rows


def encode_target(values, positive=None) -> np.ndarray:
    distinct = sorted({v.strip() for v in values})
    if len(distinct) != 2:
        raise IngestError(f"target must have exactly 2 distinct values, found {len(distinct)}: {distinct[:5]}")
    if positive is None:
        try:
            as_num = sorted(float(v) for v in distinct)
        except ValueError:
            as_num = None
        if as_num != [0.0, 1.0]:
            raise IngestError(f"target values {distinct} are not 0/1; pass the positive label explicitly")
        return np.array([float(v) == 1.0 for v in values], dtype=np.int8)
    positive = str(positive).strip()
    if positive not in distinct:
        raise IngestError(f"positive label {positive!r} not among target values {distinct}")
    return np.array([v.strip() == positive for v in values], dtype=np.int8)


def ingest_dataset(
    path,
    target: str,
    positive=None,
    truth_col: str | None = None,
    categorical=(),
    numeric=(),
    drop=(),
    dataset_id: str | None = None,
):
    """Read a CSV into a :class:`DatasetTable` with the minimal preprocessing.

    Categorical columns become first-appearance integer codes with missing
    values as their own code; other columns are parsed as reals with missing
    or unparseable entries set to 0. Column type is taken from ``categorical``
    / ``numeric`` when listed there, otherwise inferred with
    :func:`looks_numeric`.

    Returns
    -------
    (DatasetTable, TrueConditionals or None)
    """
    header, rows = _read_rows(path)
    if target not in header:
        raise IngestError(f"target column {target!r} not found in {Path(path).name}")
    if truth_col is not None and truth_col not in header:
        raise IngestError(f"truth column {truth_col!r} not found in {Path(path).name}")
    cols = list(zip(*rows))
    by_name = dict(zip(header, cols))
    labels = encode_target(by_name[target], positive)

    skip = {target, truth_col, *drop}
    features = []
    for name, col in zip(header, cols):
        if name in skip:
            continue
        if name in categorical or (name not in numeric and not looks_numeric(col)):
            features.append(encode_categorical(col))
        else:
            features.append(np.array([parse_real(v) for v in col]))
    if not features:
        raise IngestError("no feature columns left after removing target/truth/dropped columns")
    truth = None
    if truth_col is not None:
        truth = TrueConditionals([float(v) for v in by_name[truth_col]])
    table = DatasetTable(np.column_stack(features), labels, dataset_id or Path(path).stem)
    return table, truth


def write_dataset(path, table: DatasetTable, truth: TrueConditionals | None = None):
    """Write features as ``x1..xd``, labels as ``y`` and, if given, truth as ``q``."""
    d = table.n_features
    header = [f"x{j + 1}" for j in range(d)] + ["y"] + (["q"] if truth is not None else [])
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(table.n):
            row = [repr(float(v)) for v in table.rows[i]] + [int(table.labels[i])]
            if truth is not None:
                row.append(repr(float(truth.q[i])))
            w.writerow(row)


def read_score_file(path, learner_id: str = "external") -> list:
    """Parse an external score file into one :class:`ScoreSource` per dataset."""
    header, rows = _read_rows(path)
    missing = [c for c in SCORE_FILE_COLUMNS if c not in header]
    if missing:
        raise IngestError(f"score file lacks columns {missing}")
    pos = {c: header.index(c) for c in SCORE_FILE_COLUMNS}
    grouped = defaultdict(lambda: defaultdict(lambda: defaultdict(list)))
    for line, r in enumerate(rows, start=2):
        split = r[pos["split"]].strip()
        if split not in SPLITS:
            raise IngestError(f"line {line}: split must be one of {SPLITS}, got {split!r}")
        try:
            fold = int(r[pos["fold"]])
            label = int(float(r[pos["label"]]))
            score = float(r[pos["score"]])
        except ValueError as exc:
            raise IngestError(f"line {line}: {exc}") from None
        if label not in (0, 1) or not 0.0 <= score <= 1.0:
            raise IngestError(f"line {line}: label must be 0/1 and score in [0, 1]")
        grouped[r[pos["dataset_id"]].strip()][fold][split].append((r[pos["row_id"]].strip(), label, score))

    sources = []
    for ds in sorted(grouped):
        splits = {}
        for fold in sorted(grouped[ds]):
            parts = grouped[ds][fold]
            if "test" not in parts:
                raise IngestError(f"dataset {ds!r} fold {fold} has no test rows")
            splits[fold] = {
                name: (
                    np.array([t[0] for t in parts.get(name, [])], dtype=object),
                    np.array([t[1] for t in parts.get(name, [])], dtype=np.int8),
                    np.array([t[2] for t in parts.get(name, [])], dtype=float),
                )
                for name in SPLITS
            }
        sources.append(ScoreSource(ds, learner_id, splits))
    return sources


def read_labeled_scores(path, require_labels: bool = True):
    """Read a two-column ``score,label`` file (label optional when not required)."""
    header, rows = _read_rows(path)
    if "score" not in header:
        raise IngestError(f"{Path(path).name} lacks a 'score' column")
    si = header.index("score")
    scores = np.array([float(r[si]) for r in rows])
    labels = None
    if "label" in header:
        li = header.index("label")
        labels = np.array([int(float(r[li])) for r in rows])
    elif require_labels:
        raise IngestError(f"{Path(path).name} lacks a 'label' column")
    return scores, labels
