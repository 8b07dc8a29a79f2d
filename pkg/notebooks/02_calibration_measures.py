"""
Measuring calibration
=====================

Proper scores, Spiegelhalter's Z, ECE and the calibration index on a few
hand-made score vectors.
"""

# %%
import numpy as np

from calbench import BinaryLabeledScores, evaluate, msm_partition
from calbench.metrics import eci_local, eci_suite

rng = np.random.default_rng(0)
n = 5000
q = rng.beta(2, 2, n)
y = (rng.random(n) < q).astype(int)

# %%
# Three predictors of the same labels: the truth, an over-confident warp and
# the constant base rate.
candidates = {
    "truth": q,
    "over-confident": np.clip(0.5 + 1.6 * (q - 0.5), 0, 1),
    "base rate": np.full(n, y.mean()),
}
for name, s in candidates.items():
    r = evaluate(BinaryLabeledScores(s, y))
    print(
        f"{name:>15}: brier {r.brier:.4f}  log-loss {r.log_loss:.4f}  Z {r.spiegelhalter_z:+.2f}"
        f"  ECE {r.ece:.4f}  ECI {r.eci_global:.3f}  AUC {r.auc_roc:.3f}"
    )

# %%
# The constant base-rate predictor is perfectly calibrated in the frequency
# sense (ECE is exactly 0) while having no discrimination at all.

# %%
# MSM binning: equal-mass bins, with the bin count swept down from sqrt(N)
# until the observed frequencies are monotone.
part = msm_partition(candidates["over-confident"], y)
print(f"{len(part)} bins of size {part.sizes.min()}-{part.sizes.max()}")
for ms, of in zip(part.mean_scores, part.obs_freqs):
    print(f"  mean score {ms:.3f}   observed {of:.3f}   ECI_l {eci_local(ms, of):.3f}")

# %%
# Over-confident bins sit below the diagonal on the right and above it on the
# left; the calibration index splits them into the two sides.
suite = eci_suite(BinaryLabeledScores(candidates["over-confident"], y))
print(f"over {suite.over:.3f}  under {suite.under:.3f}  balance {suite.balance:+.3f}")
