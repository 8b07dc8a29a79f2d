"""Command-line entry point: ``calbench {gen-synth,run,report,calibrate}``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .calibrators import CALIBRATORS, fit_calibrator, fit_pearsonify
from .core import LOG_LOSS_EPS, BinaryLabeledScores
from .harness import BenchConfig, DatasetRef, emit_report, fmt, run_benchmark
from .ingest import read_labeled_scores, write_dataset
from .learners import LEARNERS
from .metrics import brier, log_loss
from .synth import KINDS, SynthSpec, generate


def _csv_list(text):
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _synth_arg(text):
    """``kind:n[:d[:seed]]``"""
    parts = text.split(":")
    try:
        kind, n = parts[0], int(parts[1])
        d = int(parts[2]) if len(parts) > 2 else 20
        seed = int(parts[3]) if len(parts) > 3 else 0
        return SynthSpec(kind, n, d, seed)
    except (IndexError, ValueError) as exc:
        raise argparse.ArgumentTypeError(f"bad synthetic spec {text!r}: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="calbench", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-synth", help="write a synthetic dataset with its true conditionals")
    g.add_argument("--kind", choices=KINDS, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--d", type=int, default=20)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    r = sub.add_parser("run", help="run the cross-validated calibration benchmark")
    r.add_argument("--data", action="append", default=[], metavar="CSV")
    r.add_argument("--target", help="target column of every --data file")
    r.add_argument("--positive", help="target value treated as the positive class")
    r.add_argument("--truth-col", help="column holding true P(Y=1|x); excluded from features")
    r.add_argument("--synth", action="append", default=[], type=_synth_arg, metavar="KIND:N[:D[:SEED]]")
    r.add_argument("--scores", action="append", default=[], metavar="CSV",
                   help="external score file (dataset_id,fold,split,row_id,label,score)")
    r.add_argument("--scores-learner", default="external", help="learner id for --scores files")
    r.add_argument("--learners", type=_csv_list, default=LEARNERS)
    r.add_argument("--calibrators", type=_csv_list, default=tuple(CALIBRATORS))
    r.add_argument("--folds", type=int, default=5)
    r.add_argument("--repeats", type=int, default=1)
    r.add_argument("--cal-frac", type=float, default=0.2)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--threshold", type=float, default=0.5)
    r.add_argument("--clip-eps", type=float, default=LOG_LOSS_EPS)
    r.add_argument("--jobs", type=int, default=None)
    r.add_argument("--out", default="calbench-run")

    rep = sub.add_parser("report", help="rebuild rank tables and summary of a run directory")
    rep.add_argument("run_dir")

    c = sub.add_parser("calibrate", help="fit a calibrator on one score file, apply it to another")
    c.add_argument("--method", choices=tuple(CALIBRATORS), required=True)
    c.add_argument("--cal", required=True, help="CSV with score,label columns")
    c.add_argument("--test", required=True, help="CSV with a score column (label optional)")
    c.add_argument("--out", required=True)
    c.add_argument("--alpha", type=float, default=0.1, help="pearsonify miscoverage level")
    c.add_argument("--clip-eps", type=float, default=LOG_LOSS_EPS)
    return p


def cmd_gen_synth(args):
    table, truth = generate(SynthSpec(args.kind, args.n, args.d, args.seed))
    write_dataset(args.out, table, truth)
    print(f"wrote {table.n} rows to {args.out}")
    return 0


def cmd_run(args):
    if args.data and not args.target:
        raise SystemExit("--target is required with --data")
    config = BenchConfig(
        datasets=[DatasetRef(p, args.target, args.positive, args.truth_col) for p in args.data],
        synth=list(args.synth),
        score_files=[(p, args.scores_learner) for p in args.scores],
        learners=args.learners,
        calibrators=args.calibrators,
        k=args.folds,
        repeats=args.repeats,
        cal_fraction=args.cal_frac,
        master_seed=args.seed,
        threshold=args.threshold,
        clip_eps=args.clip_eps,
        jobs=args.jobs,
        out=args.out,
    )
    code = run_benchmark(config)
    print(f"results in {args.out}" + ("" if code == 0 else " (some cells failed, see summary.json)"))
    return code


def cmd_report(args):
    path = emit_report(args.run_dir)
    print(f"wrote {path}")
    return 0


def cmd_calibrate(args):
    cal_s, cal_y = read_labeled_scores(args.cal)
    test_s, test_y = read_labeled_scores(args.test, require_labels=False)
    cal = BinaryLabeledScores(cal_s, cal_y)
    if args.method == "pearsonify":
        model = fit_pearsonify(cal, args.alpha)
    else:
        model = fit_calibrator(args.method, cal)
    calibrated = np.clip(model.predict(test_s), 0.0, 1.0)
    extra = {}
    if hasattr(model, "interval"):
        a, b = model.interval(test_s)
        names = ("p0", "p1") if args.method == "venn_abers" else ("lo", "hi")
        extra = dict(zip(names, (a, b)))
    with Path(args.out).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "score", *(["label"] if test_y is not None else []), "calibrated", *extra])
        for i, s in enumerate(test_s):
            row = [i, fmt(s), *([int(test_y[i])] if test_y is not None else []), fmt(calibrated[i])]
            row += [fmt(v[i]) for v in extra.values()]
            w.writerow(row)
    if test_y is not None:
        before = BinaryLabeledScores(test_s, test_y)
        after = BinaryLabeledScores(calibrated, test_y)
        print(f"log-loss {log_loss(before, args.clip_eps):.6f} -> {log_loss(after, args.clip_eps):.6f}")
        print(f"brier    {brier(before):.6f} -> {brier(after):.6f}")
    print(f"wrote {len(test_s)} rows to {args.out}")
    return 0


COMMANDS = {
    "gen-synth": cmd_gen_synth,
    "run": cmd_run,
    "report": cmd_report,
    "calibrate": cmd_calibrate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s"
    )
    return COMMANDS[args.command](args)


def run(argv=None) -> int:
    """Like :func:`main`, but input errors become a message and exit status 2."""
    try:
        return main(argv)
    except (ValueError, OSError) as err:
        print(f"calbench: error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(run())
