"""Post-hoc probability calibration for binary classifiers and a benchmark harness."""

from .binning import BinPartition, msm_partition
from .calibrators import (
    CALIBRATORS,
    apply_beta,
    apply_isotonic,
    apply_pearsonify,
    apply_platt,
    apply_venn_abers,
    fit_beta,
    fit_calibrator,
    fit_isotonic,
    fit_pearsonify,
    fit_platt,
    fit_venn_abers,
)
from .core import (
    BinaryLabeledScores,
    CalibrationFitError,
    DatasetTable,
    RunKey,
    TrueConditionals,
    derive_task_seed,
    validate_scores,
)
from .metrics import (
    MetricReport,
    auc_roc,
    brier,
    confusion_metrics,
    ece,
    eci_suite,
    evaluate,
    log_loss,
    spiegelhalter_z,
    true_calibration_error,
)

__version__ = "0.1.0"

__all__ = [
    "CALIBRATORS",
    "BinPartition",
    "BinaryLabeledScores",
    "CalibrationFitError",
    "DatasetTable",
    "MetricReport",
    "RunKey",
    "TrueConditionals",
    "apply_beta",
    "apply_isotonic",
    "apply_pearsonify",
    "apply_platt",
    "apply_venn_abers",
    "auc_roc",
    "brier",
    "confusion_metrics",
    "derive_task_seed",
    "ece",
    "eci_suite",
    "evaluate",
    "fit_beta",
    "fit_calibrator",
    "fit_isotonic",
    "fit_pearsonify",
    "fit_platt",
    "fit_venn_abers",
    "log_loss",
    "msm_partition",
    "spiegelhalter_z",
    "true_calibration_error",
    "validate_scores",
]
