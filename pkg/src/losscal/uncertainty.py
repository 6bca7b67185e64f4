"""Predictive means and entropy-based uncertainty over MC prediction tensors.

The predictive mean averages the per-pass class probabilities; its Shannon
entropy (the plug-in estimate) is downward-biased for finite pass counts, so
a leave-one-pass-out jackknife correction is provided as the bias-reduced
estimator. Uncertainties are normalized into [0, 1] by the maximum entropy
``ln C`` so they share a domain with per-bin error rates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .io import MCSampleSet


@dataclass(frozen=True)
class UncertaintyEstimate:
    """Per-sample uncertainty summary.

    ``entropy_jackknife`` may slightly exceed the plug-in range (or dip below
    zero) before clamping; ``normalized`` is the clamped, ``ln C``-scaled
    value used for binning and rejection.
    """

    entropy_plugin: float
    entropy_jackknife: float
    normalized: float
    confidence: float


def _entropy_rows(p: np.ndarray) -> np.ndarray:
    """Shannon entropy in nats along the last axis, with 0 * ln 0 := 0."""
    p = np.clip(p, 0.0, None)
    logs = np.log(np.where(p > 0.0, p, 1.0))
    return -(p * logs).sum(axis=-1)


def _check_simplex(p: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise ValueError(f"expected a 1-D probability vector with >= 2 classes, got shape {p.shape}")
    if p.min() < -tol or abs(p.sum() - 1.0) > tol:
        raise ValueError(f"probabilities must lie on the simplex (sum={p.sum()!r})")
    return p


def predictive_mean(sample_set: MCSampleSet, sample: int) -> np.ndarray:
    """Average of the per-pass probability vectors for one sample.

    Args:
        sample_set: MC prediction tensor.
        sample: Sample index, ``0 <= sample < n_samples``.

    Returns:
        A simplex vector of length ``n_classes``.

    Raises:
        IndexError: Sample index out of range.
    """
    if not 0 <= sample < sample_set.n_samples:
        raise IndexError(f"sample index {sample} out of range for {sample_set.n_samples} samples")
    return sample_set.probs[sample].mean(axis=0)


def predictive_means(sample_set: MCSampleSet) -> np.ndarray:
    """Predictive means for every sample, shape ``(n_samples, n_classes)``."""
    return sample_set.probs.mean(axis=1)


def point_predictions(sample_set: MCSampleSet) -> np.ndarray:
    """Argmax of each predictive mean (ties resolved to the lowest class index)."""
    return predictive_means(sample_set).argmax(axis=1)


def plugin_entropy(p) -> float:
    """Plug-in Shannon entropy of a probability vector, in nats.

    Uses the convention ``0 * ln 0 = 0``; maximal exactly at the uniform
    distribution.
    """
    return float(_entropy_rows(_check_simplex(p)))


def jackknife_entropy(sample_set: MCSampleSet, sample: int) -> float:
    """Leave-one-pass-out bias-corrected entropy of one sample's predictive mean.

    Computes ``T * H(mean) - (T - 1) * mean_i H(mean excluding pass i)``,
    which cancels the O(1/T) downward bias of the plug-in estimate. The
    result can overshoot ``[0, ln C]`` slightly; callers clamp at
    normalization time.

    Raises:
        ValueError: Fewer than 2 passes (callers fall back to the plug-in).
        IndexError: Sample index out of range.
    """
    if sample_set.n_passes < 2:
        raise ValueError("jackknife requires >= 2 passes")
    if not 0 <= sample < sample_set.n_samples:
        raise IndexError(f"sample index {sample} out of range for {sample_set.n_samples} samples")
    return float(_jackknife_rows(sample_set.probs[sample][np.newaxis, :, :])[0])


def _jackknife_rows(probs: np.ndarray) -> np.ndarray:
    """Vectorized jackknife entropy over a (n, T, C) block with T >= 2."""
    t = probs.shape[1]
    mean = probs.mean(axis=1)                                # (n, C)
    h_full = _entropy_rows(mean)                             # (n,)
    loo = (t * mean[:, np.newaxis, :] - probs) / (t - 1)     # (n, T, C)
    h_loo = _entropy_rows(np.clip(loo, 0.0, None)).mean(axis=1)
    return t * h_full - (t - 1) * h_loo


def jackknife_entropies(sample_set: MCSampleSet) -> np.ndarray:
    """Jackknife entropy for every sample at once; requires T >= 2."""
    if sample_set.n_passes < 2:
        raise ValueError("jackknife requires >= 2 passes")
    return _jackknife_rows(sample_set.probs)


def plugin_entropies(sample_set: MCSampleSet) -> np.ndarray:
    """Plug-in entropy of every sample's predictive mean."""
    return _entropy_rows(predictive_means(sample_set))


def normalized_uncertainty(h, n_classes: int):
    """Clamp an entropy (nats) into ``[0, ln C]`` and rescale to [0, 1].

    Accepts scalars or arrays; jackknife overshoot below 0 or above ``ln C``
    is clipped.
    """
    if n_classes < 2:
        raise ValueError(f"need n_classes >= 2, got {n_classes}")
    h_max = float(np.log(n_classes))
    out = np.clip(h, 0.0, h_max) / h_max
    return float(out) if np.isscalar(h) else out


def confidence(p) -> float:
    """Largest component of a predictive probability vector."""
    return float(_check_simplex(p).max())


def normalized_uncertainties(sample_set: MCSampleSet, method: str = "jackknife") -> np.ndarray:
    """Per-sample normalized uncertainty for a whole sample set.

    Args:
        sample_set: MC prediction tensor.
        method: ``"jackknife"`` (bias-reduced; falls back to plug-in when
            T = 1) or ``"plugin"``.
    """
    if method not in ("jackknife", "plugin"):
        raise ValueError(f"unknown uncertainty method {method!r}")
    if method == "jackknife" and sample_set.n_passes >= 2:
        h = jackknife_entropies(sample_set)
    else:
        h = plugin_entropies(sample_set)
    return normalized_uncertainty(h, sample_set.n_classes)


def sample_uncertainty(sample_set: MCSampleSet, sample: int) -> UncertaintyEstimate:
    """Full uncertainty summary (plug-in, jackknife, normalized, confidence) for one sample."""
    mean = predictive_mean(sample_set, sample)
    h_plugin = float(_entropy_rows(mean))
    if sample_set.n_passes >= 2:
        h_jack = jackknife_entropy(sample_set, sample)
    else:
        h_jack = h_plugin
    return UncertaintyEstimate(
        entropy_plugin=h_plugin,
        entropy_jackknife=h_jack,
        normalized=normalized_uncertainty(h_jack, sample_set.n_classes),
        confidence=float(mean.max()),
    )
