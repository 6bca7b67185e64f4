"""Expected-utility decisions over MC prediction tensors.

Actions maximize the expected utility of the predictive distribution under a
strictly positive gain matrix; losses convert to utilities by subtracting
from (max loss + 1) so logarithms of expected utility stay finite. Rejection
filters samples whose normalized uncertainty exceeds a threshold, and the
confusion matrix summarizes label/action agreement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .io import MCSampleSet, UtilityMatrix
from .uncertainty import normalized_uncertainties, predictive_means


@dataclass(frozen=True)
class DecisionOutcome:
    """One sample's decision: chosen action, the expected utility of every action,
    the rejection flag, and the normalized uncertainty the flag was based on."""

    action: int
    expected_utilities: np.ndarray
    rejected: bool
    uncertainty: float


def default_class_names(n_classes: int) -> tuple[str, ...]:
    return tuple(f"class_{i}" for i in range(n_classes))


def loss_to_utility(loss, classes: tuple[str, ...] | None = None) -> UtilityMatrix:
    """Convert a nonnegative loss matrix into a strictly positive utility matrix.

    Uses ``u = (max loss + 1) - loss``; the +1 offset keeps every utility
    strictly positive so log-expected-utility terms are finite.

    Raises:
        ValueError: Negative loss entry or non-square matrix.
    """
    loss = np.asarray(loss, dtype=float)
    if loss.ndim != 2 or loss.shape[0] != loss.shape[1]:
        raise ValueError(f"loss matrix must be square, got shape {loss.shape}")
    if np.any(loss < 0.0):
        raise ValueError("loss entries must be >= 0")
    offset = float(loss.max()) + 1.0
    if classes is None:
        classes = default_class_names(loss.shape[0])
    return UtilityMatrix(classes=classes, values=offset - loss)


def zero_one_utility(n_classes: int, classes: tuple[str, ...] | None = None) -> UtilityMatrix:
    """Utility derived from the 0/1 loss (2 on the diagonal, 1 off); its Bayes
    action coincides with the plain argmax."""
    return loss_to_utility(1.0 - np.eye(n_classes), classes=classes)


def expected_utility(p, utility: UtilityMatrix) -> np.ndarray:
    """Expected utility of each action under a predictive distribution.

    ``EU[a] = sum_y p[y] * u[y][a]``.

    Raises:
        ValueError: Dimension mismatch between ``p`` and the matrix.
    """
    p = np.asarray(p, dtype=float)
    if p.shape != (utility.n_classes,):
        raise ValueError(f"probability vector of length {p.shape} does not match {utility.n_classes} classes")
    return p @ utility.values


def bayes_action(p, utility: UtilityMatrix) -> int:
    """Action with maximal expected utility; ties break to the lowest class index."""
    return int(np.argmax(expected_utility(p, utility)))


def bayes_actions(sample_set: MCSampleSet, utility: UtilityMatrix) -> np.ndarray:
    """Bayes action of every sample's predictive mean."""
    if sample_set.n_classes != utility.n_classes:
        raise ValueError(
            f"sample set has {sample_set.n_classes} classes, utility matrix {utility.n_classes}"
        )
    return (predictive_means(sample_set) @ utility.values).argmax(axis=1)


def expected_loss(sample_set: MCSampleSet, utility: UtilityMatrix, actions) -> float:
    """Mean realized loss of the given actions, reconstructed from the utility.

    Per sample the loss is ``max(u) - u[true][action]``, the same offset
    convention as :func:`loss_to_utility`, so expected loss plus realized
    utility equals ``max(u)`` for every sample.

    Raises:
        ValueError: Empty or mis-sized action list, or action out of range.
    """
    actions = np.asarray(actions, dtype=int)
    if actions.size == 0:
        raise ValueError("actions must not be empty")
    if actions.shape != (sample_set.n_samples,):
        raise ValueError(f"need one action per sample, got {actions.shape}")
    if sample_set.n_classes != utility.n_classes:
        raise ValueError("sample set and utility matrix class counts differ")
    if actions.min() < 0 or actions.max() >= utility.n_classes:
        raise ValueError("action index out of range")
    m_u = float(utility.values.max())
    realized = utility.values[sample_set.labels, actions]
    return float(np.mean(m_u - realized))


def reject_uncertain(
    sample_set: MCSampleSet, threshold: float, method: str = "jackknife"
) -> tuple[np.ndarray, np.ndarray]:
    """Split sample indices into (kept, rejected) by normalized uncertainty.

    A sample is rejected when its normalized uncertainty strictly exceeds
    the threshold, so a threshold of 1.0 keeps everything.

    Args:
        sample_set: MC prediction tensor.
        threshold: Normalized uncertainty cutoff in [0, 1].
        method: Uncertainty estimator (``"jackknife"`` or ``"plugin"``).

    Raises:
        ValueError: Threshold outside [0, 1].
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {threshold}")
    unc = normalized_uncertainties(sample_set, method=method)
    rejected = np.flatnonzero(unc > threshold)
    kept = np.flatnonzero(unc <= threshold)
    return kept, rejected


def confusion_matrix(labels, actions, n_classes: int | None = None, normalize: bool = False) -> np.ndarray:
    """Counts (or row-normalized rates) of ``[true class, action]`` pairs.

    Rows index the true class. With ``normalize=True`` each row is divided
    by its sum; all-zero rows stay zero.

    Raises:
        ValueError: Length mismatch between labels and actions.
    """
    labels = np.asarray(labels, dtype=int)
    actions = np.asarray(actions, dtype=int)
    if labels.shape != actions.shape:
        raise ValueError(f"labels and actions have mismatched lengths {labels.shape} vs {actions.shape}")
    if n_classes is None:
        n_classes = int(max(labels.max(initial=-1), actions.max(initial=-1))) + 1
    counts = np.zeros((n_classes, n_classes), dtype=float)
    np.add.at(counts, (labels, actions), 1.0)
    if normalize:
        sums = counts.sum(axis=1, keepdims=True)
        counts = np.divide(counts, sums, out=np.zeros_like(counts), where=sums > 0)
    return counts


def decide_all(
    sample_set: MCSampleSet,
    utility: UtilityMatrix,
    reject_above: float = 1.0,
    method: str = "jackknife",
) -> list[DecisionOutcome]:
    """Per-sample Bayes decisions with uncertainty-based rejection flags."""
    means = predictive_means(sample_set)
    eus = means @ utility.values
    actions = eus.argmax(axis=1)
    unc = normalized_uncertainties(sample_set, method=method)
    if not 0.0 <= reject_above <= 1.0:
        raise ValueError(f"reject_above must lie in [0, 1], got {reject_above}")
    return [
        DecisionOutcome(
            action=int(actions[i]),
            expected_utilities=eus[i],
            rejected=bool(unc[i] > reject_above),
            uncertainty=float(unc[i]),
        )
        for i in range(sample_set.n_samples)
    ]
