"""
A tour of the five calibrators
==============================

Fit each calibration map on the same distorted scores and look at what it
does to a few test scores.
"""

# %%
# The scores are cubed true probabilities: confident negatives stay put but
# everything else is pushed towards zero, so the classifier looks
# under-confident about positives.
import numpy as np

from calbench import BinaryLabeledScores, fit_calibrator, log_loss
from calbench.evaluation import holdout_calibration_split
from calbench.synth import SynthSpec, generate

np.set_printoptions(precision=4, suppress=True)

table, truth = generate(SynthSpec("twonorm", 4000, 20, seed=3))
scores = truth.q**3
test_idx, cal_idx = holdout_calibration_split(np.arange(table.n), table.labels, 0.2, seed=3)
cal = BinaryLabeledScores(scores[cal_idx], table.labels[cal_idx])
test = BinaryLabeledScores(scores[test_idx], table.labels[test_idx])
print(f"calibration set: {cal.n} rows, {cal.n_positive} positive")
print(f"uncalibrated test log-loss: {log_loss(test):.4f}")

# %%
# Each fitted model exposes ``predict``. Parametric maps have a handful of
# numbers behind them; isotonic stores its knots; Venn-Abers keeps the whole
# calibration set.
grid = np.array([0.001, 0.01, 0.05, 0.125, 0.3, 0.6, 0.9])
models = {}
for name in ("platt", "beta", "isotonic", "venn_abers", "pearsonify"):
    models[name] = fit_calibrator(name, cal)
    print(f"{name:>11}: {models[name].predict(grid)}")
print(f"{'cube root':>11}: {np.cbrt(grid)}")

# %%
# Platt fits a sigmoid in the raw score, which cannot bend like a cube root.
# Beta calibration works on log-scores and contains the power law: with
# ``s = q^3`` the population map is ``a = 1/3, b = 0, c = 0``. Twonorm puts
# most of its mass near q = 0 and q = 1, so 800 rows pin it down loosely.
platt, beta = models["platt"], models["beta"]
print(f"platt A={platt.A:.3f} B={platt.B:.3f}")
print(f"beta  a={beta.a:.3f} b={beta.b:.3f} c={beta.c:.3f}")

# %%
# Venn-Abers returns a pair of probabilities per score, from isotonic fits
# with the test point appended as a negative and as a positive. The point
# estimate ``p1 / (1 - p0 + p1)`` sits between them.
p0, p1 = models["venn_abers"].interval(grid)
for s, a, b, p in zip(grid, p0, p1, models["venn_abers"].predict(grid)):
    print(f"s={s:<6} p0={a:.4f} p1={b:.4f} point={p:.4f}")

# %%
# Pearsonify wraps the score in a conformal band whose half-width scales with
# the binomial standard deviation; its point output is the band midpoint.
lo, hi = models["pearsonify"].interval(grid)
print(f"q_alpha = {models['pearsonify'].q_alpha:.3f}")
print(np.column_stack([grid, lo, hi]))

# %%
# Test-set log-loss after calibration. Isotonic regression puts hard 0/1
# values at its extremes, and a single surprise there costs -ln(1e-15).
for name, model in models.items():
    calibrated = np.clip(model.predict(test.scores), 0, 1)
    print(f"{name:>11}: {log_loss(BinaryLabeledScores(calibrated, test.labels)):.4f}")
