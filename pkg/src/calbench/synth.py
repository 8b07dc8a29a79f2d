"""Breiman's twonorm / threenorm / ringnorm problems with exact P(Y=1 | x).

Labels are fair coin flips; features come from the class-conditional
Gaussians below, and the true conditional follows from the log-density ratio
under equal priors.

=========  ================================================  ========================
kind       class 0                                           class 1
=========  ================================================  ========================
twonorm    N(-a 1, I), a = 2/sqrt(d)                         N(a 1, I)
threenorm  1/2 N(a 1, I) + 1/2 N(-a 1, I), a = 2/sqrt(d)     N((a, -a, a, ...), I)
ringnorm   N(0, 4 I)                                         N(a 1, I), a = 1/sqrt(d)
=========  ================================================  ========================
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from .core import DatasetTable, TrueConditionals

KINDS = ("twonorm", "threenorm", "ringnorm")
_LOG2PI = np.log(2 * np.pi)


@dataclass(frozen=True)
class SynthSpec:
    kind: str
    n: int
    d: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown synthetic kind {self.kind!r}; choose from {KINDS}")
        if self.n < 2 or self.d < 1:
            raise ValueError("need n >= 2 and d >= 1")

    @property
    def dataset_id(self) -> str:
        return f"{self.kind}-n{self.n}-d{self.d}-s{self.seed}"


def _alternating(d):
    return np.where(np.arange(d) % 2 == 0, 1.0, -1.0)


def _log_normal_iso(x, mean, var):
    d = x.shape[1]
    return -0.5 * (d * (_LOG2PI + np.log(var)) + np.sum((x - mean) ** 2, axis=1) / var)


def class_log_densities(kind: str, x: np.ndarray):
    """Return ``(log f0(x), log f1(x))`` for each row of ``x``."""
    d = x.shape[1]
    if kind == "twonorm":
        a = 2 / np.sqrt(d)
        return _log_normal_iso(x, -a, 1.0), _log_normal_iso(x, a, 1.0)
    if kind == "threenorm":
        a = 2 / np.sqrt(d)
        f0 = logsumexp(
            [_log_normal_iso(x, a, 1.0), _log_normal_iso(x, -a, 1.0)], axis=0, b=0.5
        )
        return f0, _log_normal_iso(x, a * _alternating(d), 1.0)
    if kind == "ringnorm":
        a = 1 / np.sqrt(d)
        return _log_normal_iso(x, 0.0, 4.0), _log_normal_iso(x, a, 1.0)
    raise ValueError(f"unknown synthetic kind {kind!r}")


def true_conditional(kind: str, x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    f0, f1 = class_log_densities(kind, x)
    return expit(f1 - f0)


def generate(spec: SynthSpec):
    """Draw a dataset and its true conditionals; identical specs give identical output."""
    rng = np.random.default_rng(spec.seed)
    n, d = spec.n, spec.d
    y = rng.integers(0, 2, size=n)
    noise = rng.standard_normal((n, d))
    if spec.kind == "twonorm":
        a = 2 / np.sqrt(d)
        x = noise + np.where(y == 1, a, -a)[:, None]
    elif spec.kind == "threenorm":
        a = 2 / np.sqrt(d)
        component = rng.integers(0, 2, size=n)
        mean0 = np.where(component == 0, a, -a)[:, None] * np.ones(d)
        mean1 = a * _alternating(d)
        x = noise + np.where((y == 1)[:, None], mean1, mean0)
    else:
        a = 1 / np.sqrt(d)
        x = np.where((y == 1)[:, None], noise + a, 2.0 * noise)
    q = true_conditional(spec.kind, x)
    return DatasetTable(x, y, spec.dataset_id), TrueConditionals(q)
