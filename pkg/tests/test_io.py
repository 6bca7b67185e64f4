import json

import numpy as np
import pytest

from losscal.io import (
    CalibrationReport,
    MCSampleSet,
    UtilityMatrix,
    load_predictions,
    load_utility,
    write_predictions,
    write_report,
    write_utility,
)
from losscal.metrics import DiagramRow

from conftest import random_sample_set


def _write_csv(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestLoadPredictions:
    def test_single_uniform_row(self, tmp_path):
        p = tmp_path / "p.csv"
        _write_csv(p, ["sample_id,mc_pass,true_label,p_0,p_1,p_2,p_3",
                       "0,0,0,0.25,0.25,0.25,0.25"])
        s = load_predictions(p)
        assert (s.n_samples, s.n_passes, s.n_classes) == (1, 1, 4)
        assert np.allclose(s.probs[0, 0], 0.25)
        assert s.labels[0] == 0

    def test_off_simplex_row_reports_row_number(self, tmp_path):
        p = tmp_path / "p.csv"
        _write_csv(p, ["sample_id,mc_pass,true_label,p_0,p_1",
                       "0,0,0,0.5,0.5",
                       "0,1,0,0.5,0.3"])
        with pytest.raises(ValueError, match="off-simplex at row 3"):
            load_predictions(p)

    def test_25_pass_tensor(self, tmp_path):
        rng = np.random.default_rng(0)
        lines = ["sample_id,mc_pass,true_label,p_0,p_1,p_2,p_3"]
        for i in range(2):
            for t in range(25):
                probs = rng.dirichlet(np.ones(4))
                lines.append(f"{i},{t},{i}," + ",".join(f"{v:.9f}" for v in probs))
        p = tmp_path / "p.csv"
        _write_csv(p, lines)
        s = load_predictions(p)
        assert (s.n_samples, s.n_passes, s.n_classes) == (2, 25, 4)

    def test_malformed_header(self, tmp_path):
        p = tmp_path / "p.csv"
        _write_csv(p, ["sample,mc_pass,true_label,p_0,p_1", "0,0,0,0.5,0.5"])
        with pytest.raises(ValueError, match="malformed header"):
            load_predictions(p)

    def test_missing_pass_rejected(self, tmp_path):
        p = tmp_path / "p.csv"
        _write_csv(p, ["sample_id,mc_pass,true_label,p_0,p_1",
                       "0,0,0,0.5,0.5",
                       "1,0,1,0.5,0.5",
                       "1,1,1,0.5,0.5"])
        with pytest.raises(ValueError, match="dense"):
            load_predictions(p)

    def test_duplicate_cell_rejected(self, tmp_path):
        p = tmp_path / "p.csv"
        _write_csv(p, ["sample_id,mc_pass,true_label,p_0,p_1",
                       "0,0,0,0.5,0.5",
                       "0,0,0,0.5,0.5"])
        with pytest.raises(ValueError, match="duplicate"):
            load_predictions(p)

    def test_label_out_of_range(self, tmp_path):
        p = tmp_path / "p.csv"
        _write_csv(p, ["sample_id,mc_pass,true_label,p_0,p_1", "0,0,5,0.5,0.5"])
        with pytest.raises(ValueError, match="label out of range"):
            load_predictions(p)

    def test_inconsistent_label_rejected(self, tmp_path):
        p = tmp_path / "p.csv"
        _write_csv(p, ["sample_id,mc_pass,true_label,p_0,p_1",
                       "0,0,0,0.5,0.5",
                       "0,1,1,0.5,0.5"])
        with pytest.raises(ValueError, match="conflicting labels"):
            load_predictions(p)

    def test_row_order_independence(self, tmp_path):
        rng = np.random.default_rng(3)
        lines = []
        for i in range(4):
            for t in range(3):
                probs = rng.dirichlet(np.ones(3))
                lines.append(f"{i},{t},{i % 3}," + ",".join(f"{v:.9f}" for v in probs))
        header = "sample_id,mc_pass,true_label,p_0,p_1,p_2"
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        _write_csv(p1, [header] + lines)
        shuffled = list(lines)
        rng.shuffle(shuffled)
        _write_csv(p2, [header] + shuffled)
        s1, s2 = load_predictions(p1), load_predictions(p2)
        assert np.array_equal(s1.probs, s2.probs)
        assert np.array_equal(s1.labels, s2.labels)

    def test_round_trip_within_1e12(self, tmp_path):
        rng = np.random.default_rng(11)
        original = random_sample_set(rng, 50, 5, 4)
        path = tmp_path / "round.csv"
        write_predictions(original, path)
        loaded = load_predictions(path)
        assert np.max(np.abs(loaded.probs - original.probs)) <= 1e-12
        assert np.array_equal(loaded.labels, original.labels)

    def test_rows_renormalized_exactly(self, tmp_path):
        p = tmp_path / "p.csv"
        # within the 1e-6 tolerance but not exactly on the simplex
        _write_csv(p, ["sample_id,mc_pass,true_label,p_0,p_1",
                       "0,0,0,0.4999999,0.4999999"])
        s = load_predictions(p)
        assert s.probs[0, 0].sum() == 1.0


class TestMCSampleSetValidation:
    def test_shape_invariants(self):
        with pytest.raises(ValueError, match="n_classes >= 2"):
            MCSampleSet(probs=np.ones((1, 1, 1)), labels=np.array([0]))

    def test_label_range(self):
        with pytest.raises(ValueError, match="label out of range"):
            MCSampleSet(probs=np.full((1, 1, 2), 0.5), labels=np.array([2]))

    def test_simplex_enforced(self):
        with pytest.raises(ValueError, match="off-simplex"):
            MCSampleSet(probs=np.full((1, 1, 2), 0.4), labels=np.array([0]))


class TestLoadUtility:
    def test_diagnosis_matrix(self, tmp_path, diagnosis_utility):
        path = tmp_path / "u.json"
        write_utility(diagnosis_utility, path)
        u = load_utility(path)
        assert u.classes == diagnosis_utility.classes
        assert np.array_equal(u.values, diagnosis_utility.values)
        assert u.values[0, 0] == 2.1 and u.values[3, 0] == 1.2

    def test_two_class_matrix(self, tmp_path):
        path = tmp_path / "u.json"
        path.write_text(json.dumps({
            "classes": ["a", "b"], "rows_are_true_class": True,
            "matrix": [[2, 1], [1, 2]],
        }))
        u = load_utility(path)
        assert u.n_classes == 2

    def test_non_positive_entry(self, tmp_path):
        path = tmp_path / "u.json"
        path.write_text(json.dumps({
            "classes": ["a", "b"], "rows_are_true_class": True,
            "matrix": [[2, 0.0], [1, 2]],
        }))
        with pytest.raises(ValueError, match="non-positive utility"):
            load_utility(path)

    def test_non_square(self, tmp_path):
        path = tmp_path / "u.json"
        path.write_text(json.dumps({
            "classes": ["a", "b"], "rows_are_true_class": True,
            "matrix": [[2, 1, 1], [1, 2, 1]],
        }))
        with pytest.raises(ValueError, match="square"):
            load_utility(path)

    def test_class_count_mismatch(self, tmp_path):
        path = tmp_path / "u.json"
        path.write_text(json.dumps({
            "classes": ["a", "b", "c"], "rows_are_true_class": True,
            "matrix": [[2, 1], [1, 2]],
        }))
        with pytest.raises(ValueError, match="does not match"):
            load_utility(path)

    def test_transposed_on_rows_are_true_class_false(self, tmp_path):
        path = tmp_path / "u.json"
        path.write_text(json.dumps({
            "classes": ["a", "b"], "rows_are_true_class": False,
            "matrix": [[2, 3], [1, 2]],
        }))
        u = load_utility(path)
        assert u.values[0, 1] == 1 and u.values[1, 0] == 3


def _report(ece_value=0.35, bins=None):
    if bins is None:
        bins = [DiagramRow(lo=i / 10, hi=(i + 1) / 10, count=0, mean_x=(2 * i + 1) / 20,
                           empirical_y=0.0, gap=0.0) for i in range(10)]
    return CalibrationReport(accuracy=0.75, expected_loss=0.2625, ece=ece_value, mce=0.7,
                             uce=0.0833, muce=0.15, sharpness=0.0022, bins=tuple(bins))


class TestWriteReport:
    def test_six_decimal_serialization(self, tmp_path):
        path = tmp_path / "report.json"
        write_report(_report(), path)
        text = path.read_text()
        assert '"ece": 0.350000' in text
        parsed = json.loads(text)
        assert list(parsed) == ["accuracy", "expected_loss", "ece", "mce",
                                "uce", "muce", "sharpness", "bins"]
        assert len(parsed["bins"]) == 10
        assert list(parsed["bins"][0]) == ["lo", "hi", "count", "mean_x", "empirical_y", "gap"]

    def test_single_occupied_bin(self, tmp_path):
        bins = [DiagramRow(lo=i / 10, hi=(i + 1) / 10, count=4 if i == 9 else 0,
                           mean_x=0.95 if i == 9 else (2 * i + 1) / 20,
                           empirical_y=1.0 if i == 9 else 0.0,
                           gap=0.05 if i == 9 else 0.0) for i in range(10)]
        path = tmp_path / "report.json"
        write_report(_report(bins=bins), path)
        parsed = json.loads(path.read_text())
        counts = [row["count"] for row in parsed["bins"]]
        assert counts.count(0) == 9 and sum(counts) == 4

    def test_unwritable_path(self, tmp_path):
        blocker = tmp_path / "file.txt"
        blocker.write_text("x")
        with pytest.raises(OSError):
            write_report(_report(), blocker / "report.json")

    def test_dominance_validated(self):
        with pytest.raises(ValueError, match="dominance"):
            CalibrationReport(accuracy=0.5, expected_loss=0.1, ece=0.4, mce=0.1,
                              uce=0.1, muce=0.2, sharpness=0.0, bins=())


class TestUtilityMatrixValidation:
    def test_requires_positive(self):
        with pytest.raises(ValueError, match="non-positive"):
            UtilityMatrix(classes=("a", "b"), values=np.array([[1.0, -0.5], [1.0, 1.0]]))

    def test_requires_square(self):
        with pytest.raises(ValueError, match="square"):
            UtilityMatrix(classes=("a", "b"), values=np.ones((2, 3)))
