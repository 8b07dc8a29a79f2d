"""Beta calibration (three-parameter "abm" variant)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_expit

from ..core import BETA_EPS, BinaryLabeledScores, CalibrationFitError, ConvergenceError

# tiny ridge on the shape coefficients keeps Newton finite on separable splits
_RIDGE = 1e-8


@dataclass(frozen=True)
class BetaParams:
    """Map ``1 / (1 + exp(-c) (1 - s)^b / s^a)``."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ValueError("beta calibration needs a >= 0 and b >= 0")

    def logit(self, s):
        s = np.clip(np.asarray(s, dtype=float), BETA_EPS, 1.0 - BETA_EPS)
        return self.a * np.log(s) - self.b * np.log1p(-s) + self.c

    def predict(self, s):
        return expit(self.logit(s))


def beta_features(s) -> np.ndarray:
    s = np.clip(np.asarray(s, dtype=float), BETA_EPS, 1.0 - BETA_EPS)
    return np.column_stack([np.log(s), -np.log1p(-s)])


def _mean_nll(X, y, w):
    f = X @ w
    return float(-np.mean(y * log_expit(f) + (1 - y) * log_expit(-f)))


def newton_logistic(X, y, ridge, max_iter=100, tol=1e-10):
    """Unweighted logistic MLE with intercept (last column of the result).

    ``ridge`` is a per-coefficient penalty vector (intercept excluded).
    """
    n, k = X.shape
    Xa = np.column_stack([X, np.ones(n)])
    lam = np.append(np.asarray(ridge, dtype=float), 0.0)
    rate = y.mean()
    w = np.zeros(k + 1)
    w[-1] = np.log(rate / (1 - rate))

    def obj(w):
        return _mean_nll(Xa, y, w) + 0.5 * np.dot(lam * w, w)

    cur = obj(w)
    for _ in range(max_iter):
        p = expit(Xa @ w)
        g = Xa.T @ (p - y) / n + lam * w
        if np.linalg.norm(g) <= tol:
            return w
        H = (Xa * (p * (1 - p))[:, None]).T @ Xa / n + np.diag(lam)
        H[np.diag_indices_from(H)] += 1e-12
        d = -np.linalg.solve(H, g)
        step = 1.0
        while step > 1e-12:
            cand = w + step * d
            new = obj(cand)
            if new <= cur + 1e-4 * step * np.dot(g, d):
                break
            step /= 2
        else:
            if np.linalg.norm(g) <= 1e-7:
                return w
            raise ConvergenceError("beta calibration line search failed", w)
        w, cur = cand, new
    p = expit(Xa @ w)
    g = Xa.T @ (p - y) / n + lam * w
    if np.linalg.norm(g) <= 1e-7:
        return w
    raise ConvergenceError(f"beta calibration did not converge in {max_iter} iterations", w)


def fit_beta(cal: BinaryLabeledScores) -> BetaParams:
    """Maximum-likelihood fit of (a, b, c).

    A negative shape coefficient is pinned to zero and the remaining ones
    refitted, so the returned map is always non-decreasing.
    """
    if not cal.has_both_classes:
        raise CalibrationFitError("beta calibration needs both classes in the calibration set")
    X = beta_features(cal.scores)
    y = cal.labels.astype(float)
    free = [0, 1]
    while True:
        w = newton_logistic(X[:, free], y, [_RIDGE] * len(free))
        coefs = dict(zip(free, w[:-1]))
        negative = [j for j in free if coefs[j] < 0]
        if not negative:
            break
        free.remove(negative[0])
    return BetaParams(
        a=float(coefs.get(0, 0.0)),
        b=float(coefs.get(1, 0.0)),
        c=float(w[-1]),
    )


def apply_beta(params: BetaParams, s):
    return params.predict(s)
