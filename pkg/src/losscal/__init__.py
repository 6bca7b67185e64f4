"""Calibrated-uncertainty metrics, expected-utility decisions, and a
desk-scale loss-calibrated dropweights classifier.

The library operates on dense Monte-Carlo prediction tensors (N samples x
T stochastic passes x C class probabilities). Submodules:

* :mod:`losscal.io` - file formats and the core data types.
* :mod:`losscal.uncertainty` - predictive means, plug-in and jackknife entropy.
* :mod:`losscal.metrics` - binning, ECE/MCE/UCE/MUCE, sharpness, reliability rows.
* :mod:`losscal.decision` - utility matrices, Bayes actions, rejection, confusion.
* :mod:`losscal.training` - synthetic data and the loss-calibrated trainer.
* :mod:`losscal.transport` - 1-D Wasserstein distance and error/uncertainty gap.
* :mod:`losscal.diagrams` - SVG reliability diagrams.
* :mod:`losscal.cli` - the ``losscal`` command.
"""

__version__ = "0.1.0"

from .io import (
    CalibrationReport,
    MCSampleSet,
    UtilityMatrix,
    load_predictions,
    load_utility,
    write_predictions,
    write_report,
)
from .metrics import (
    BinPartition,
    DiagramRow,
    ece,
    mce,
    muce,
    partition,
    reliability_data,
    sharpness,
    uce,
)
from .uncertainty import (
    UncertaintyEstimate,
    confidence,
    jackknife_entropy,
    normalized_uncertainty,
    plugin_entropy,
    predictive_mean,
)
from .decision import (
    DecisionOutcome,
    bayes_action,
    confusion_matrix,
    expected_loss,
    expected_utility,
    loss_to_utility,
    reject_uncertain,
)
from .training import (
    NetworkParams,
    SyntheticDataset,
    TrainConfig,
    TrainedModel,
    elbo_loss,
    forward,
    h_step,
    lcvi_loss,
    make_synthetic,
    mc_predict,
    train,
)
from .transport import ErrorUncertaintyGap, error_uncertainty_gap, wasserstein1

__all__ = [
    "__version__",
    "BinPartition",
    "CalibrationReport",
    "DecisionOutcome",
    "DiagramRow",
    "ErrorUncertaintyGap",
    "MCSampleSet",
    "NetworkParams",
    "SyntheticDataset",
    "TrainConfig",
    "TrainedModel",
    "UncertaintyEstimate",
    "UtilityMatrix",
    "bayes_action",
    "confidence",
    "confusion_matrix",
    "ece",
    "elbo_loss",
    "error_uncertainty_gap",
    "expected_loss",
    "expected_utility",
    "forward",
    "h_step",
    "jackknife_entropy",
    "lcvi_loss",
    "load_predictions",
    "load_utility",
    "loss_to_utility",
    "make_synthetic",
    "mc_predict",
    "mce",
    "muce",
    "normalized_uncertainty",
    "partition",
    "plugin_entropy",
    "predictive_mean",
    "reject_uncertain",
    "reliability_data",
    "sharpness",
    "train",
    "uce",
    "wasserstein1",
    "write_predictions",
    "write_report",
]
