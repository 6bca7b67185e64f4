"""On-disk formats for prediction tensors, utility matrices, and calibration reports.

Three file formats are defined here and consumed by every other module:

* Predictions CSV: one row per (sample, MC pass) with the per-class
  probability vector produced by a stochastic forward pass.
* Utility JSON: a square, strictly positive gain matrix ``u[true_class][action]``
  together with the declared class order.
* Report JSON: the calibration statistics plus per-bin reliability rows,
  serialized with a fixed key order and 6-decimal reals so outputs are
  byte-reproducible.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .metrics import DiagramRow

SIMPLEX_TOLERANCE = 1e-6
PREDICTIONS_FLOAT_FORMAT = "%.12g"

_FIXED_COLUMNS = ("sample_id", "mc_pass", "true_label")


@dataclass(frozen=True)
class MCSampleSet:
    """Dense N x T x C tensor of per-pass class probabilities plus true labels.

    Attributes:
        probs: Array of shape ``(n_samples, n_passes, n_classes)``; every
            ``probs[i, t]`` lies on the probability simplex within
            ``SIMPLEX_TOLERANCE``.
        labels: Integer array of shape ``(n_samples,)`` with values in
            ``0..n_classes-1``.
    """

    probs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "labels", labels)
        if probs.ndim != 3:
            raise ValueError(f"probs must be 3-D (samples, passes, classes), got shape {probs.shape}")
        n, t, c = probs.shape
        if n < 1 or t < 1 or c < 2:
            raise ValueError(f"need n_samples >= 1, n_passes >= 1, n_classes >= 2, got {probs.shape}")
        if labels.shape != (n,):
            raise ValueError(f"labels shape {labels.shape} does not match {n} samples")
        if labels.min() < 0 or labels.max() >= c:
            raise ValueError(f"label out of range: labels must lie in 0..{c - 1}")
        if np.any(probs < -SIMPLEX_TOLERANCE) or np.any(probs > 1.0 + SIMPLEX_TOLERANCE):
            raise ValueError("probabilities must lie in [0, 1]")
        sums = probs.sum(axis=2)
        if np.any(np.abs(sums - 1.0) > SIMPLEX_TOLERANCE):
            bad = np.argwhere(np.abs(sums - 1.0) > SIMPLEX_TOLERANCE)[0]
            raise ValueError(
                f"off-simplex probability row at sample {bad[0]}, pass {bad[1]}: sum={sums[bad[0], bad[1]]!r}"
            )

    @property
    def n_samples(self) -> int:
        return self.probs.shape[0]

    @property
    def n_passes(self) -> int:
        return self.probs.shape[1]

    @property
    def n_classes(self) -> int:
        return self.probs.shape[2]


@dataclass(frozen=True)
class UtilityMatrix:
    """Square gain matrix ``values[true_class][action]`` with declared class order.

    All entries must be strictly positive so that logarithms of expected
    utilities are finite everywhere.
    """

    classes: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "values", values)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError(f"utility matrix must be square, got shape {values.shape}")
        if len(self.classes) != values.shape[0]:
            raise ValueError(
                f"class list length {len(self.classes)} does not match matrix size {values.shape[0]}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("utility matrix entries must be finite")
        if np.any(values <= 0.0):
            raise ValueError("non-positive utility: all entries must be > 0")

    @property
    def n_classes(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class CalibrationReport:
    """Calibration statistics plus the per-bin confidence-reliability rows."""

    accuracy: float
    expected_loss: float
    ece: float
    mce: float
    uce: float
    muce: float
    sharpness: float
    bins: tuple[DiagramRow, ...]

    def __post_init__(self):
        object.__setattr__(self, "bins", tuple(self.bins))
        for name in ("accuracy", "ece", "mce", "uce", "muce"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.sharpness < 0.0 or self.expected_loss < 0.0:
            raise ValueError("sharpness and expected_loss must be >= 0")
        # max dominates the weighted mean; allow float-level slack only
        if self.mce < self.ece - 1e-12 or self.muce < self.uce - 1e-12:
            raise ValueError("report violates max >= weighted-mean dominance")


def load_predictions(path: str | Path) -> MCSampleSet:
    """Read a predictions CSV into a validated, dense MC sample tensor.

    Rows may arrive in any order; they are grouped by ``(sample_id, mc_pass)``
    and every combination in ``0..N-1 x 0..T-1`` must be present exactly once.
    Probability rows are checked against the simplex within 1e-6 and then
    renormalized exactly, which absorbs serialization rounding without
    masking real errors.

    Args:
        path: CSV file with header ``sample_id,mc_pass,true_label,p_0,...,p_{C-1}``.

    Returns:
        The validated MCSampleSet.

    Raises:
        ValueError: Malformed header, off-simplex row, duplicate or missing
            (sample, pass) combination, inconsistent or out-of-range label.
        OSError: Unreadable path.
    """
    path = Path(path)
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file, expected predictions CSV header")
        n_classes = len(header) - len(_FIXED_COLUMNS)
        expected = list(_FIXED_COLUMNS) + [f"p_{i}" for i in range(n_classes)]
        if n_classes < 2 or [h.strip() for h in header] != expected:
            raise ValueError(
                f"{path}: malformed header {header!r}, expected "
                "sample_id,mc_pass,true_label,p_0,...,p_{C-1}"
            )

        cells: dict[tuple[int, int], np.ndarray] = {}
        sample_labels: dict[int, int] = {}
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected):
                raise ValueError(f"{path}: row {line_no} has {len(row)} fields, expected {len(expected)}")
            try:
                sid = int(row[0])
                mc_pass = int(row[1])
                label = int(row[2])
                probs = np.array([float(v) for v in row[3:]], dtype=float)
            except ValueError as exc:
                raise ValueError(f"{path}: row {line_no} is not parseable: {exc}") from None
            if sid < 0 or mc_pass < 0:
                raise ValueError(f"{path}: row {line_no}: sample_id and mc_pass must be >= 0")
            if not 0 <= label < n_classes:
                raise ValueError(f"{path}: row {line_no}: label out of range (got {label}, C={n_classes})")
            total = probs.sum()
            if np.any(probs < -SIMPLEX_TOLERANCE) or abs(total - 1.0) > SIMPLEX_TOLERANCE:
                raise ValueError(f"{path}: off-simplex at row {line_no}: probabilities sum to {total!r}")
            key = (sid, mc_pass)
            if key in cells:
                raise ValueError(f"{path}: row {line_no}: duplicate (sample, pass) = {key}")
            if sid in sample_labels and sample_labels[sid] != label:
                raise ValueError(
                    f"{path}: row {line_no}: sample {sid} has conflicting labels "
                    f"{sample_labels[sid]} and {label}"
                )
            cells[key] = probs / total  # exact renormalization after the tolerance check
            sample_labels[sid] = label

    if not cells:
        raise ValueError(f"{path}: no data rows")
    n_samples = max(k[0] for k in cells) + 1
    n_passes = max(k[1] for k in cells) + 1
    if len(cells) != n_samples * n_passes:
        missing = [
            (i, t) for i in range(n_samples) for t in range(n_passes) if (i, t) not in cells
        ]
        raise ValueError(
            f"{path}: tensor must be dense; missing (sample, pass) combinations, e.g. {missing[:5]}"
        )

    probs = np.empty((n_samples, n_passes, n_classes), dtype=float)
    labels = np.empty(n_samples, dtype=int)
    for (sid, mc_pass), p in cells.items():
        probs[sid, mc_pass] = p
    for sid, label in sample_labels.items():
        labels[sid] = label
    return MCSampleSet(probs=probs, labels=labels)


def write_predictions(sample_set: MCSampleSet, path: str | Path) -> None:
    """Write an MCSampleSet to the predictions CSV format (12 significant digits, LF endings)."""
    path = Path(path)
    c = sample_set.n_classes
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(",".join(list(_FIXED_COLUMNS) + [f"p_{i}" for i in range(c)]) + "\n")
        for i in range(sample_set.n_samples):
            label = int(sample_set.labels[i])
            for t in range(sample_set.n_passes):
                probs = ",".join(PREDICTIONS_FLOAT_FORMAT % v for v in sample_set.probs[i, t])
                fh.write(f"{i},{t},{label},{probs}\n")


def load_utility(path: str | Path) -> UtilityMatrix:
    """Read and validate a utility JSON file.

    The schema is ``{"classes": [...], "rows_are_true_class": bool,
    "matrix": [[...]]}``. When ``rows_are_true_class`` is false the matrix is
    transposed on load so that in-memory rows always index the true class.

    Raises:
        ValueError: Non-square matrix, non-positive entry, class list /
            matrix size mismatch, or missing keys.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON: {exc}") from None
    for key in ("classes", "rows_are_true_class", "matrix"):
        if key not in data:
            raise ValueError(f"{path}: utility JSON is missing key {key!r}")
    classes = tuple(str(c) for c in data["classes"])
    matrix = data["matrix"]
    if not isinstance(matrix, list) or any(len(r) != len(matrix) for r in matrix):
        raise ValueError(f"{path}: utility matrix must be square")
    values = np.asarray(matrix, dtype=float)
    if not data["rows_are_true_class"]:
        values = values.T
    return UtilityMatrix(classes=classes, values=values)


def write_utility(utility: UtilityMatrix, path: str | Path) -> None:
    """Write a UtilityMatrix in the utility JSON schema (rows index the true class)."""
    payload = {
        "classes": list(utility.classes),
        "rows_are_true_class": True,
        "matrix": [[float(v) for v in row] for row in utility.values],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _f6(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x!r}")
    return f"{x:.6f}"


def write_report(report: CalibrationReport, path: str | Path) -> None:
    """Write a CalibrationReport as JSON with fixed key order and 6-decimal reals.

    Raises:
        OSError: Unwritable path.
    """
    lines = ["{"]
    for key in ("accuracy", "expected_loss", "ece", "mce", "uce", "muce", "sharpness"):
        lines.append(f'  "{key}": {_f6(getattr(report, key))},')
    bin_lines = []
    for row in report.bins:
        bin_lines.append(
            '    {"lo": %s, "hi": %s, "count": %d, "mean_x": %s, "empirical_y": %s, "gap": %s}'
            % (_f6(row.lo), _f6(row.hi), int(row.count), _f6(row.mean_x), _f6(row.empirical_y), _f6(row.gap))
        )
    lines.append('  "bins": [')
    lines.append(",\n".join(bin_lines))
    lines.append("  ]")
    lines.append("}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
