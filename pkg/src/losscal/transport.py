"""One-dimensional optimal transport between empirical distributions.

The Wasserstein-1 distance between two empirical samples has a closed form:
the integral of the absolute difference of the two quantile functions, which
for piecewise-constant inverse CDFs reduces to a weighted sum over the merged
sample breakpoints. ``error_uncertainty_gap`` applies it to the uncertainty
distributions of misclassified versus correct samples and pairs it with the
rank correlation between uncertainty and error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .io import MCSampleSet
from .uncertainty import normalized_uncertainties, point_predictions


@dataclass(frozen=True)
class ErrorUncertaintyGap:
    """Distributional gap (W1) and rank correlation between uncertainty and error."""

    w1: float
    spearman: float


def _as_sample(values, name: str) -> np.ndarray:
    values = np.asarray(values, dtype=float).ravel()
    if values.size < 1:
        raise ValueError(f"{name} must contain at least one value")
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{name} must be finite")
    return values


def wasserstein1(a, b) -> float:
    """Wasserstein-1 distance between two empirical distributions.

    Integrates ``|F_a^{-1}(t) - F_b^{-1}(t)|`` over ``t in [0, 1]`` using the
    merged sorted values as breakpoints, which is exact for unequal sample
    sizes; for equal sizes it reduces to the mean absolute difference of the
    sorted values.

    Args:
        a: Finite reals, unordered, n >= 1.
        b: Finite reals, unordered, n >= 1.

    Raises:
        ValueError: Empty or non-finite sample.
    """
    av = np.sort(_as_sample(a, "sample a"))
    bv = np.sort(_as_sample(b, "sample b"))
    merged = np.sort(np.concatenate([av, bv]))
    deltas = np.diff(merged)
    if deltas.size == 0:
        return 0.0
    cdf_a = np.searchsorted(av, merged[:-1], side="right") / av.size
    cdf_b = np.searchsorted(bv, merged[:-1], side="right") / bv.size
    return float(np.sum(np.abs(cdf_a - cdf_b) * deltas))


def error_uncertainty_gap(sample_set: MCSampleSet, method: str = "jackknife") -> ErrorUncertaintyGap:
    """How strongly estimated uncertainty separates wrong from correct predictions.

    ``w1`` is the Wasserstein-1 distance between the normalized uncertainties
    of misclassified and correctly classified samples (point predictions are
    the argmax of each predictive mean); ``spearman`` is the rank correlation
    between per-sample uncertainty and the 0/1 error indicator, with ties
    handled by average ranks.

    Raises:
        ValueError: All predictions correct or all wrong (the split is
            degenerate and W1 is undefined on an empty side).
    """
    errors = point_predictions(sample_set) != sample_set.labels
    n_wrong = int(errors.sum())
    if n_wrong == 0 or n_wrong == sample_set.n_samples:
        raise ValueError("degenerate split: need both correct and incorrect predictions")
    unc = normalized_uncertainties(sample_set, method=method)
    w1 = wasserstein1(unc[errors], unc[~errors])
    rho = stats.spearmanr(unc, errors.astype(float)).statistic
    return ErrorUncertaintyGap(w1=w1, spearman=float(rho))
