import numpy as np
import pytest

from losscal.io import MCSampleSet
from losscal.transport import error_uncertainty_gap, wasserstein1

import oracles


class TestWasserstein1:
    def test_point_masses(self):
        assert wasserstein1([0.0], [1.0]) == pytest.approx(1.0, abs=1e-15)

    def test_identical_samples(self):
        assert wasserstein1([0.3, 0.7, 0.1], [0.3, 0.7, 0.1]) == 0.0

    def test_unequal_pair_against_lp(self):
        assert wasserstein1([0.0, 0.5], [0.25, 1.0]) == pytest.approx(0.375, abs=1e-12)
        assert wasserstein1([0.0, 0.5], [0.25, 1.0]) == pytest.approx(
            oracles.wasserstein_lp([0.0, 0.5], [0.25, 1.0]), abs=1e-9)

    def test_equal_sizes_reduce_to_sorted_mean_difference(self):
        rng = np.random.default_rng(0)
        a, b = rng.normal(size=12), rng.normal(size=12)
        expected = np.mean(np.abs(np.sort(a) - np.sort(b)))
        assert wasserstein1(a, b) == pytest.approx(expected, abs=1e-12)

    def test_lp_oracle_on_small_instances(self):
        rng = np.random.default_rng(1)
        for _ in range(40):
            a = rng.uniform(-2, 2, size=rng.integers(1, 9))
            b = rng.uniform(-2, 2, size=rng.integers(1, 9))
            assert wasserstein1(a, b) == pytest.approx(oracles.wasserstein_lp(a, b), abs=1e-9)

    def test_symmetry(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            a = rng.normal(size=rng.integers(1, 16))
            b = rng.normal(size=rng.integers(1, 16))
            assert wasserstein1(a, b) == pytest.approx(wasserstein1(b, a), abs=1e-12)

    def test_translation_invariance(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            a = rng.normal(size=rng.integers(1, 16))
            b = rng.normal(size=rng.integers(1, 16))
            c = rng.uniform(-5, 5)
            assert wasserstein1(a + c, b + c) == pytest.approx(wasserstein1(a, b), abs=1e-12)

    def test_triangle_inequality(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            a = rng.normal(size=rng.integers(1, 16))
            b = rng.normal(size=rng.integers(1, 16))
            c = rng.normal(size=rng.integers(1, 16))
            assert wasserstein1(a, c) <= wasserstein1(a, b) + wasserstein1(b, c) + 1e-12

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="at least one"):
            wasserstein1([], [1.0])

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            wasserstein1([np.nan], [1.0])


def _set_with_uncertainties(wrong_unc, correct_unc):
    """Two-class single-pass set where sample entropy is controlled directly.

    A pass [p, 1-p] has normalized entropy H([p,1-p])/ln2; invert to get p for
    each requested uncertainty via bisection.
    """
    from scipy.optimize import brentq

    def p_for(u):
        if u >= 1.0:
            return 0.5
        if u <= 0.0:
            return 1.0 - 1e-12
        target = u * np.log(2)
        return brentq(
            lambda p: -(p * np.log(p) + (1 - p) * np.log(1 - p)) - target, 0.5 + 1e-12, 1 - 1e-12)

    rows = []
    labels = []
    for u in wrong_unc:
        rows.append([1.0 - p_for(u), p_for(u)])  # argmax = class 1, label 0 -> wrong
        labels.append(0)
    for u in correct_unc:
        rows.append([p_for(u), 1.0 - p_for(u)])  # argmax = class 0, label 0 -> correct
        labels.append(0)
    probs = np.asarray(rows)[:, np.newaxis, :]
    return MCSampleSet(probs=probs, labels=np.asarray(labels))


class TestErrorUncertaintyGap:
    def test_perfect_separation(self):
        # maximal-entropy passes would tie the argmax, so keep the wrong side
        # slightly below u = 1
        s = _set_with_uncertainties(wrong_unc=[0.999, 0.999], correct_unc=[0.0, 0.0])
        gap = error_uncertainty_gap(s)
        assert gap.w1 == pytest.approx(0.999, abs=1e-2)
        assert gap.spearman == pytest.approx(1.0, abs=1e-12)

    def test_same_distribution_both_sides(self):
        s = _set_with_uncertainties(wrong_unc=[0.2, 0.8], correct_unc=[0.2, 0.8])
        gap = error_uncertainty_gap(s)
        assert gap.w1 == pytest.approx(0.0, abs=1e-9)

    def test_sorted_mean_difference_oracle(self):
        s = _set_with_uncertainties(wrong_unc=[0.8, 0.9], correct_unc=[0.1, 0.2])
        gap = error_uncertainty_gap(s)
        assert gap.w1 == pytest.approx(0.7, abs=1e-9)
        assert gap.spearman > 0

    def test_degenerate_split_rejected(self):
        s = _set_with_uncertainties(wrong_unc=[], correct_unc=[0.1, 0.2])
        with pytest.raises(ValueError, match="degenerate split"):
            error_uncertainty_gap(s)
