"""Post-hoc calibration maps fitted on a held-out calibration split.

Every fitted model exposes ``predict(scores)`` returning calibrated
positive-class probabilities; :func:`fit_calibrator` dispatches by name.
"""

from ..core import BinaryLabeledScores, CalibrationFitError, ConvergenceError
from .beta import BetaParams, apply_beta, fit_beta
from .isotonic import IsotonicModel, apply_isotonic, fit_isotonic, isotonic_fit_values, pav
from .pearsonify import PearsonifyModel, apply_pearsonify, fit_pearsonify
from .platt import PlattParams, apply_platt, fit_platt
from .venn_abers import VennAbersModel, apply_venn_abers, fit_venn_abers, point_estimate

CALIBRATORS = {
    "platt": fit_platt,
    "isotonic": fit_isotonic,
    "beta": fit_beta,
    "venn_abers": fit_venn_abers,
    "pearsonify": fit_pearsonify,
}


def fit_calibrator(name: str, cal: BinaryLabeledScores):
    try:
        fit = CALIBRATORS[name]
    except KeyError:
        raise ValueError(f"unknown calibrator {name!r}; choose from {sorted(CALIBRATORS)}") from None
    return fit(cal)


__all__ = [
    "CALIBRATORS",
    "BetaParams",
    "CalibrationFitError",
    "ConvergenceError",
    "IsotonicModel",
    "PearsonifyModel",
    "PlattParams",
    "VennAbersModel",
    "apply_beta",
    "apply_isotonic",
    "apply_pearsonify",
    "apply_platt",
    "apply_venn_abers",
    "fit_beta",
    "fit_calibrator",
    "fit_isotonic",
    "fit_pearsonify",
    "fit_platt",
    "fit_venn_abers",
    "isotonic_fit_values",
    "pav",
    "point_estimate",
]
