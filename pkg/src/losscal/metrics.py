"""Equal-width binning and the five calibration statistics.

Confidence calibration compares binned mean confidence with binned accuracy
(expected and maximum calibration error); uncertainty calibration compares
binned mean normalized uncertainty with the binned misclassification rate
(expected and maximum uncertainty calibration error). Sharpness is the
unweighted population variance of the per-bin gaps. All statistics skip
empty bins; reliability rows are emitted for every bin, empty ones included,
so the weighted gap sum over the rows reproduces the expected error exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_BINS = 10

DIAGRAM_MODES = ("confidence", "uncertainty")


@dataclass(frozen=True)
class BinPartition:
    """Assignment of sample indices to M equal-width bins over [0, 1].

    Bin ``i`` covers ``[i/M, (i+1)/M)``; the last bin is closed at 1.
    """

    m: int
    edges: tuple[tuple[float, float], ...]
    members: tuple[np.ndarray, ...]


@dataclass(frozen=True)
class DiagramRow:
    """One reliability-diagram bin: edges, occupancy, means, and gap.

    ``mean_x`` is the mean binned quantity (confidence or normalized
    uncertainty); ``empirical_y`` is the bin's accuracy or error rate; empty
    bins carry the bin midpoint, zero, and zero gap.
    """

    lo: float
    hi: float
    count: int
    mean_x: float
    empirical_y: float
    gap: float


def _check_unit_interval(values: np.ndarray, what: str) -> None:
    if values.size and (values.min() < 0.0 or values.max() > 1.0):
        raise ValueError(f"{what} must lie in [0, 1], got range [{values.min()}, {values.max()}]")


def _bin_indices(values: np.ndarray, m: int) -> np.ndarray:
    # interior edges at j/m; side="right" implements [lo, hi) with the last bin closed at 1
    edges = np.arange(1, m) / m
    return np.searchsorted(edges, values, side="right")


def partition(values, m: int) -> BinPartition:
    """Assign each value in [0, 1] to one of ``m`` equal-width bins.

    Args:
        values: Per-sample reals in [0, 1].
        m: Number of bins, >= 1.

    Returns:
        A BinPartition whose members arrays jointly cover every index once.

    Raises:
        ValueError: ``m < 1`` or a value outside [0, 1].
    """
    values = np.asarray(values, dtype=float)
    if m < 1:
        raise ValueError(f"bin count must be >= 1, got {m}")
    _check_unit_interval(values, "binned values")
    idx = _bin_indices(values, m)
    members = tuple(np.flatnonzero(idx == b) for b in range(m))
    edges = tuple((b / m, (b + 1) / m) for b in range(m))
    return BinPartition(m=m, edges=edges, members=members)


def _binned_stats(x: np.ndarray, y: np.ndarray, m: int):
    """Yield (count, mean_x, mean_y) per bin; means are None for empty bins."""
    idx = _bin_indices(x, m)
    for b in range(m):
        mask = idx == b
        count = int(mask.sum())
        if count:
            yield count, float(x[mask].mean()), float(y[mask].mean())
        else:
            yield 0, None, None


def _as_xy(x, y, x_name: str, y_name: str) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"{x_name} and {y_name} have mismatched lengths {x.shape} vs {y.shape}")
    if x.size < 1:
        raise ValueError(f"{x_name} must contain at least one sample")
    _check_unit_interval(x, x_name)
    return x, y


def ece(confidences, correct, m: int = DEFAULT_BINS) -> float:
    """Expected calibration error: count-weighted mean |accuracy - confidence| over bins."""
    x, y = _as_xy(confidences, correct, "confidences", "correct")
    n = x.size
    total = 0.0
    for count, mean_x, mean_y in _binned_stats(x, y, m):
        if count:
            total += (count / n) * abs(mean_y - mean_x)
    return total


def mce(confidences, correct, m: int = DEFAULT_BINS) -> float:
    """Maximum calibration error: worst |accuracy - confidence| over nonempty bins."""
    x, y = _as_xy(confidences, correct, "confidences", "correct")
    worst = 0.0
    for count, mean_x, mean_y in _binned_stats(x, y, m):
        if count:
            worst = max(worst, abs(mean_y - mean_x))
    return worst


def uce(uncertainties, errors, m: int = DEFAULT_BINS) -> float:
    """Uncertainty calibration error: count-weighted mean |error rate - uncertainty| over bins.

    Args:
        uncertainties: Per-sample normalized uncertainties in [0, 1].
        errors: Per-sample misclassification indicators (1 = wrong).
        m: Number of equal-width bins.
    """
    x, y = _as_xy(uncertainties, errors, "uncertainties", "errors")
    n = x.size
    total = 0.0
    for count, mean_x, mean_y in _binned_stats(x, y, m):
        if count:
            total += (count / n) * abs(mean_y - mean_x)
    return total


def muce(uncertainties, errors, m: int = DEFAULT_BINS) -> float:
    """Maximum uncertainty calibration error: worst-case bin deviation between error and uncertainty."""
    x, y = _as_xy(uncertainties, errors, "uncertainties", "errors")
    worst = 0.0
    for count, mean_x, mean_y in _binned_stats(x, y, m):
        if count:
            worst = max(worst, abs(mean_y - mean_x))
    return worst


def sharpness(uncertainties, errors, m: int = DEFAULT_BINS) -> float:
    """Population variance of the per-bin |error rate - uncertainty| gaps, unweighted over nonempty bins."""
    x, y = _as_xy(uncertainties, errors, "uncertainties", "errors")
    gaps = [abs(mean_y - mean_x) for count, mean_x, mean_y in _binned_stats(x, y, m) if count]
    return float(np.var(gaps))


def reliability_data(x, y_indicator, m: int = DEFAULT_BINS, mode: str = "confidence") -> list[DiagramRow]:
    """Per-bin reliability rows, one per bin including empty ones, ordered by lower edge.

    The count-weighted sum of the returned gaps equals ``ece`` (confidence
    mode) or ``uce`` (uncertainty mode) on the same input. Empty bins get
    count 0, the bin midpoint as ``mean_x``, and zero ``empirical_y``/``gap``.

    Args:
        x: Binned quantity per sample (confidence or normalized uncertainty).
        y_indicator: Correctness indicators (confidence mode) or error
            indicators (uncertainty mode).
        m: Number of bins.
        mode: ``"confidence"`` or ``"uncertainty"``; records which diagram
            the rows describe.
    """
    if mode not in DIAGRAM_MODES:
        raise ValueError(f"mode must be one of {DIAGRAM_MODES}, got {mode!r}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y_indicator, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"inputs have mismatched lengths {x.shape} vs {y.shape}")
    if m < 1:
        raise ValueError(f"bin count must be >= 1, got {m}")
    _check_unit_interval(x, "binned values")

    rows = []
    for b, (count, mean_x, mean_y) in enumerate(_binned_stats(x, y, m)):
        lo, hi = b / m, (b + 1) / m
        if count:
            rows.append(
                DiagramRow(lo=lo, hi=hi, count=count, mean_x=mean_x,
                           empirical_y=mean_y, gap=abs(mean_y - mean_x))
            )
        else:
            rows.append(
                DiagramRow(lo=lo, hi=hi, count=0, mean_x=(lo + hi) / 2.0,
                           empirical_y=0.0, gap=0.0)
            )
    return rows
