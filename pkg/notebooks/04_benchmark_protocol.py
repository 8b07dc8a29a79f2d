"""
The benchmark protocol end to end
=================================

Stratified folds, a calibration holdout carved from the training folds,
one cell per (dataset, fold, learner, calibrator), then deltas and ranks.
"""

# %%
import json
import tempfile
from pathlib import Path

import numpy as np

from calbench import RunKey
from calbench.evaluation import FeatureSource, RunConfig, cell_indices, run_cell
from calbench.harness import BenchConfig, run_benchmark
from calbench.synth import SynthSpec, generate

table, truth = generate(SynthSpec("ringnorm", 1500, 20, seed=0))
source = FeatureSource(table, truth)
config = RunConfig(k=5, cal_fraction=0.2, master_seed=7)

# %%
# A cell's index sets. The uncalibrated arm trains on all of ``train``;
# calibrated arms train on ``fit`` and calibrate on ``cal``.
train, fit, cal, test = cell_indices(source, RunKey(table.dataset_id, 1, "gaussian_nb"), config)
print(f"train {train.size} = fit {fit.size} + cal {cal.size}; test {test.size}")
print(f"positive rates: train {table.labels[train].mean():.3f}, test {table.labels[test].mean():.3f}")

# %%
# Run one learner under every arm on one fold.
for arm in ("none", "platt", "isotonic", "beta", "venn_abers", "pearsonify"):
    r = run_cell(RunKey(table.dataset_id, 1, "gaussian_nb", arm), source, config).report
    print(f"{arm:>10}: log-loss {r.log_loss:.4f}  ECE {r.ece:.4f}  true MAE {r.true_calibration_mae:.4f}")

# %%
# The full grid writes metrics, deltas, rank tables and a JSON summary.
with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "run"
    cfg = BenchConfig(
        synth=[SynthSpec("twonorm", 800, 20, 0), SynthSpec("ringnorm", 800, 20, 1)],
        learners=("logistic", "gaussian_nb"),
        k=5,
        master_seed=7,
        out=str(out),
    )
    print("exit code", run_benchmark(cfg))
    print(sorted(p.name for p in out.iterdir()))
    summary = json.loads((out / "summary.json").read_text())

# %%
# Expected rank of each calibrator by log-loss change (lower is better), and
# how often it improved on the uncalibrated model.
ranks = summary["expected_rank_calibrator"]["log_loss"]
changes = summary["relative_change"]["log_loss"]
for name in sorted(ranks, key=ranks.get):
    c = changes[name]
    print(f"{name:>10}: expected rank {ranks[name]:.2f}, improved {c['improved']}/{c['defined']},"
          f" median change {c['quantiles']['50']:+.1f}%")
print(np.round(list(ranks.values()), 2).sum(), "= sum of expected ranks")
