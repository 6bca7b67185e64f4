import numpy as np
import pytest

from losscal.metrics import (
    DiagramRow,
    ece,
    mce,
    muce,
    partition,
    reliability_data,
    sharpness,
    uce,
)

import oracles


class TestPartition:
    def test_boundary_rule(self):
        part = partition([0.0, 0.05, 0.1], 10)
        assert list(part.members[0]) == [0, 1]
        assert list(part.members[1]) == [2]

    def test_one_enters_last_bin(self):
        part = partition([1.0], 10)
        assert list(part.members[9]) == [0]

    def test_single_bin_holds_all(self):
        part = partition([0.0, 0.3, 1.0], 1)
        assert list(part.members[0]) == [0, 1, 2]

    def test_every_index_in_exactly_one_bin(self):
        rng = np.random.default_rng(0)
        values = rng.random(200)
        part = partition(values, 7)
        combined = np.sort(np.concatenate(part.members))
        assert np.array_equal(combined, np.arange(200))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            partition([1.2], 10)

    def test_rejects_zero_bins(self):
        with pytest.raises(ValueError):
            partition([0.5], 0)


class TestEce:
    def test_singleton_bins_hand_value(self):
        assert ece([0.9, 0.8, 0.7, 0.6], [1, 1, 0, 1], 10) == pytest.approx(0.35, abs=1e-12)

    def test_perfectly_matched_single_bin(self):
        assert ece([0.75] * 4, [1, 1, 1, 0], 10) == pytest.approx(0.0, abs=1e-12)

    def test_all_correct_full_confidence(self):
        assert ece([1.0] * 5, [1] * 5, 10) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="mismatched"):
            ece([0.5], [1, 0], 10)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            ece([], [], 10)


class TestMce:
    def test_hand_value(self):
        assert mce([0.9, 0.8, 0.7, 0.6], [1, 1, 0, 1], 10) == pytest.approx(0.7, abs=1e-12)

    def test_perfectly_calibrated_single_bin(self):
        assert mce([0.75] * 4, [1, 1, 1, 0], 10) == pytest.approx(0.0, abs=1e-12)

    def test_single_wrong_sample(self):
        assert mce([0.6], [0], 10) == pytest.approx(0.6, abs=1e-12)


class TestUce:
    def test_singleton_bins_hand_value(self):
        assert uce([0.05, 0.15, 0.95], [0, 0, 1], 10) == pytest.approx(0.25 / 3, abs=1e-12)

    def test_error_equals_uncertainty_everywhere(self):
        # each bin's mean uncertainty matches its error rate exactly
        unc = [0.25] * 4 + [0.75] * 4
        err = [0, 0, 1, 0] + [1, 1, 1, 0]
        assert uce(unc, err, 10) == 0.0

    def test_all_certain_all_correct(self):
        assert uce([0.0] * 4, [0] * 4, 10) == 0.0

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            uce([1.3], [1], 10)


class TestMuce:
    def test_hand_value(self):
        assert muce([0.05, 0.15, 0.95], [0, 0, 1], 10) == pytest.approx(0.15, abs=1e-12)

    def test_perfectly_uncertainty_calibrated(self):
        assert muce([0.5, 0.5], [1, 0], 10) == pytest.approx(0.0, abs=1e-12)

    def test_single_bin_gap(self):
        assert muce([0.2] * 5, [1] * 5, 1) == pytest.approx(0.8, abs=1e-12)


class TestSharpness:
    def test_hand_variance(self):
        expected = np.var([0.05, 0.15, 0.05])
        assert sharpness([0.05, 0.15, 0.95], [0, 0, 1], 10) == pytest.approx(expected, abs=1e-12)
        assert sharpness([0.05, 0.15, 0.95], [0, 0, 1], 10) == pytest.approx(0.002222, abs=5e-7)

    def test_equal_gaps_zero(self):
        assert sharpness([0.1, 0.9], [0, 1], 10) == pytest.approx(0.0, abs=1e-12)

    def test_single_nonempty_bin(self):
        assert sharpness([0.45, 0.48], [1, 0], 10) == 0.0


class TestReliabilityData:
    def test_empty_input_gives_empty_rows(self):
        rows = reliability_data([], [], 10, mode="confidence")
        assert len(rows) == 10
        assert all(r.count == 0 and r.gap == 0.0 for r in rows)
        assert rows[0].mean_x == pytest.approx(0.05)

    def test_weighted_gap_sum_reproduces_ece(self):
        confs = [0.9, 0.8, 0.7, 0.6]
        correct = [1, 1, 0, 1]
        rows = reliability_data(confs, correct, 10, mode="confidence")
        total = sum((r.count / 4) * r.gap for r in rows)
        assert total == ece(confs, correct, 10)  # exact identity

    def test_uncertainty_mode_gaps(self):
        rows = reliability_data([0.05, 0.15, 0.95], [0, 0, 1], 10, mode="uncertainty")
        gaps = {i: r.gap for i, r in enumerate(rows) if r.count}
        assert gaps == {0: pytest.approx(0.05), 1: pytest.approx(0.15), 9: pytest.approx(0.05)}

    def test_rows_ordered_by_lo(self):
        rows = reliability_data([0.3, 0.9], [1, 0], 5)
        assert [r.lo for r in rows] == [0.0, 0.2, 0.4, 0.6, 0.8]

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError, match="mode"):
            reliability_data([0.5], [1], 10, mode="wat")


class TestAgainstBruteForce:
    """Loop-per-bin oracle equivalence on random inputs (unit-scale version
    of the acceptance run)."""

    @pytest.mark.parametrize("m", [1, 5, 10, 15])
    def test_all_four_match(self, m):
        rng = np.random.default_rng(100 + m)
        for _ in range(25):
            n = rng.integers(1, 200)
            x = rng.random(n)
            y = rng.integers(0, 2, n)
            assert ece(x, y, m) == pytest.approx(oracles.expected_gap(x, y, m), abs=1e-12)
            assert mce(x, y, m) == pytest.approx(oracles.max_gap(x, y, m), abs=1e-12)
            assert uce(x, y, m) == pytest.approx(oracles.expected_gap(x, y, m), abs=1e-12)
            assert muce(x, y, m) == pytest.approx(oracles.max_gap(x, y, m), abs=1e-12)
            assert sharpness(x, y, m) == pytest.approx(oracles.gap_variance(x, y, m), abs=1e-12)

    def test_dominance_on_random_inputs(self):
        rng = np.random.default_rng(200)
        for _ in range(50):
            n = rng.integers(1, 150)
            x = rng.random(n)
            y = rng.integers(0, 2, n)
            assert mce(x, y, 10) >= ece(x, y, 10)
            assert muce(x, y, 10) >= uce(x, y, 10)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(300)
        x = rng.random(80)
        y = rng.integers(0, 2, 80)
        perm = rng.permutation(80)
        assert ece(x[perm], y[perm], 10) == pytest.approx(ece(x, y, 10), abs=1e-15)
        assert sharpness(x[perm], y[perm], 10) == pytest.approx(sharpness(x, y, 10), abs=1e-15)
