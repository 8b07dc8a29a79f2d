"""
Synthetic data with known conditional probabilities
===================================================

Breiman's Gaussian problems give the exact P(Y=1|x) for every row, which
turns calibration error into something measurable directly.
"""

# %%
import numpy as np

from calbench import BinaryLabeledScores, msm_partition, true_calibration_error
from calbench.learners import fit_learner, predict_scores
from calbench.synth import KINDS, SynthSpec, generate

for kind in KINDS:
    table, truth = generate(SynthSpec(kind, 20_000, 20, seed=1))
    print(f"{kind:>9}: balance {table.labels.mean():.3f}, q quartiles {np.percentile(truth.q, [25, 50, 75]).round(3)}")

# %%
# Labels really are drawn at rate q: within equal-mass bins of q the observed
# frequency tracks the mean of q.
table, truth = generate(SynthSpec("twonorm", 50_000, 20, seed=0))
part = msm_partition(truth.q, table.labels)
gap = np.abs(part.mean_scores - part.obs_freqs)
print(f"{len(part)} bins, max |observed - mean q| = {gap.max():.4f}")

# %%
# Learners trained on part of the data can now be scored against the truth
# instead of against noisy labels.
train = table.take(np.arange(0, 40_000))
test_rows = np.arange(40_000, 50_000)
for kind in ("class_prior", "logistic", "gaussian_nb"):
    model = fit_learner(kind, train)
    s = predict_scores(model, table.rows[test_rows])
    tce = true_calibration_error(s, truth.q[test_rows])
    print(f"{kind:>12}: mean |s - q| = {tce.mae:.4f}, mean (s - q)^2 = {tce.mse:.5f}")

# %%
# Twonorm is two spherical Gaussians, exactly the naive Bayes model, so its
# scores land almost on q. Logistic regression has the right linear boundary
# but regularisation shrinks its confidence a little.
