import numpy as np
import pytest

from speechbias.errors import NumericError, UndefinedMetricError
from speechbias.fairness import (
    ConfusionCounts,
    SubgroupReport,
    auc,
    auc_subgroup,
    confusion_from,
    core_metrics,
    disparity,
    paired_ttest,
    score_distribution,
    subgroup_metrics,
)

from oracles import brute_force_auc, t_two_sided_p_quadrature


class TestCoreMetrics:
    def test_arithmetic(self):
        report = core_metrics(ConfusionCounts(tp=3, fn=1, tn=2, fp=2))
        assert report.sensitivity == 0.75
        assert report.specificity == 0.5
        assert report.uar == 0.625
        assert report.accuracy == 0.625

    def test_perfect_classifier(self):
        report = core_metrics(ConfusionCounts(tp=5, fn=0, tn=7, fp=0))
        assert (report.accuracy, report.uar, report.sensitivity, report.specificity) == (1, 1, 1, 1)

    def test_uar_identity_holds_for_random_counts(self):
        rng = np.random.Generator(np.random.PCG64(61))
        for _ in range(200):
            tp, fn, tn, fp = (int(v) for v in rng.integers(0, 50, 4))
            if tp + fn == 0 or tn + fp == 0:
                continue
            r = core_metrics(ConfusionCounts(tp, fn, tn, fp))
            assert r.uar == (r.sensitivity + r.specificity) / 2.0

    def test_empty_class_is_explicit_error(self):
        with pytest.raises(UndefinedMetricError):
            core_metrics(ConfusionCounts(tp=0, fn=0, tn=3, fp=1))
        with pytest.raises(UndefinedMetricError):
            core_metrics(ConfusionCounts(tp=2, fn=1, tn=0, fp=0))


class TestSubgroupMetrics:
    def test_arithmetic(self):
        labels = np.array([1, 1, 0, 0, 0, 0], dtype=bool)
        predictions = np.array([1, 0, 0, 0, 0, 1], dtype=bool)
        report = subgroup_metrics(labels, predictions, np.ones(6, bool), "gender", "F")
        assert report.sensitivity == 0.5
        assert report.specificity == 0.75
        assert report.delta == 0.25

    def test_perfect_subgroup_delta_zero(self):
        labels = np.array([1, 0, 1, 0], dtype=bool)
        report = subgroup_metrics(labels, labels, np.ones(4, bool), "gender", "M")
        assert report.delta == 0.0

    def test_absent_class_is_none_not_zero(self):
        labels = np.zeros(4, dtype=bool)
        predictions = np.zeros(4, dtype=bool)
        report = subgroup_metrics(labels, predictions, np.ones(4, bool), "depression", "depressed")
        assert report.sensitivity is None
        assert report.specificity == 1.0
        assert report.delta is None

    def test_empty_subgroup_is_error(self):
        with pytest.raises(UndefinedMetricError):
            subgroup_metrics([1], [1], [False], "gender", "F")


class TestDisparity:
    def test_published_male_female_gap(self):
        male = SubgroupReport("gender", "M", 10, 10, 0.76, 0.86)
        female = SubgroupReport("gender", "F", 10, 10, 0.83, 0.68)
        report = disparity(male, female)
        assert np.isclose(report.delta_spec, 0.18)
        assert np.isclose(report.delta_sens, -0.07)
        assert male.delta == pytest.approx(0.10)
        assert female.delta == pytest.approx(-0.15)

    def test_identical_reports_zero(self):
        a = SubgroupReport("age_group", "1", 5, 5, 0.8, 0.7)
        report = disparity(a, a)
        assert report.delta_sens == 0.0 and report.delta_spec == 0.0

    def test_age_gap(self):
        g1 = SubgroupReport("age_group", "1", 9, 9, 0.78, 0.84)
        g2 = SubgroupReport("age_group", "2", 9, 9, 0.75, 0.69)
        assert disparity(g1, g2).delta_spec == pytest.approx(0.15)

    def test_undefined_side_is_error(self):
        a = SubgroupReport("gender", "M", 0, 5, None, 0.9)
        b = SubgroupReport("gender", "F", 5, 5, 0.8, 0.7)
        with pytest.raises(UndefinedMetricError):
            disparity(a, b)


class TestAuc:
    def test_three_of_four_pairs(self):
        assert auc([0.9, 0.8], [0.7, 0.85]) == 0.75

    def test_perfect_separation(self):
        assert auc([0.8, 0.9, 1.0], [0.1, 0.2]) == 1.0

    def test_single_tied_pair(self):
        assert auc([0.5], [0.5]) == 0.5

    def test_matches_brute_force_with_ties(self):
        rng = np.random.Generator(np.random.PCG64(62))
        for _ in range(100):
            n_pos = int(rng.integers(1, 40))
            n_neg = int(rng.integers(1, 40))
            # quantized scores force ties
            pos = np.round(rng.normal(size=n_pos), 1)
            neg = np.round(rng.normal(size=n_neg), 1)
            assert abs(auc(pos, neg) - brute_force_auc(pos, neg)) < 1e-12

    def test_antisymmetry_under_negation(self):
        rng = np.random.Generator(np.random.PCG64(63))
        for _ in range(30):
            pos = np.round(rng.normal(size=20), 1)
            neg = np.round(rng.normal(size=25), 1)
            assert abs(auc(pos, neg) + auc(-pos, -neg) - 1.0) < 1e-12

    def test_invariance_under_monotone_transform(self):
        rng = np.random.Generator(np.random.PCG64(64))
        pos = rng.normal(size=30)
        neg = rng.normal(size=30)
        base = auc(pos, neg)
        for transform in (np.tanh, lambda s: 3 * s + 2, lambda s: np.exp(s / 4)):
            assert abs(auc(transform(pos), transform(neg)) - base) < 1e-12

    def test_subgroup_masking(self):
        scores = np.array([0.9, 0.1, 0.8, 0.2])
        labels = np.array([1, 0, 1, 0], dtype=bool)
        mask = np.array([True, True, False, False])
        assert auc_subgroup(scores, labels, mask) == 1.0

    def test_single_class_error(self):
        with pytest.raises(UndefinedMetricError):
            auc([], [0.5])


class TestPairedTTest:
    def test_known_values(self):
        result = paired_ttest([2.0, 4.0, 6.0, 8.0, 10.0])
        assert result.t == pytest.approx(4.242640687119285, abs=1e-12)
        assert result.df == 4
        assert result.p == pytest.approx(0.013235599563682, abs=1e-12)
        assert result.significant

    def test_matches_quadrature_oracle(self):
        rng = np.random.Generator(np.random.PCG64(65))
        for _ in range(20):
            diffs = rng.normal(size=5)
            result = paired_ttest(diffs)
            if result.degenerate:
                continue
            oracle = t_two_sided_p_quadrature(result.t, result.df)
            assert result.p == pytest.approx(oracle, abs=1e-9)

    def test_all_zero_is_exact_null(self):
        result = paired_ttest([0.0] * 5)
        assert result.t == 0.0 and result.p == 1.0 and not result.degenerate

    def test_zero_variance_nonzero_mean_is_degenerate(self):
        result = paired_ttest([1.0] * 5)
        assert result.degenerate
        assert result.t is None and result.p is None
        assert "identical folds" in result.note
        assert not result.significant

    def test_needs_two_folds(self):
        with pytest.raises(NumericError):
            paired_ttest([1.0])


class TestScoreDistribution:
    def test_identical_multisets_fully_overlap(self):
        scores = [0.1, 0.4, 0.4, 0.9]
        dist = score_distribution(scores, list(scores))
        assert dist.overlap == pytest.approx(1.0)

    def test_disjoint_supports_do_not_overlap(self):
        dist = score_distribution([0.8, 0.9, 1.0], [0.0, 0.1, 0.2])
        assert dist.overlap == 0.0

    def test_two_bin_arithmetic(self):
        dist = score_distribution([0.1, 0.9], [0.2, 0.8, 0.85, 0.95], n_bins=2)
        assert np.allclose(dist.pos_mass, [0.5, 0.5])
        assert np.allclose(dist.neg_mass, [0.25, 0.75])
        assert dist.overlap == pytest.approx(0.75)

    def test_degenerate_range_handled(self):
        dist = score_distribution([0.5, 0.5], [0.5])
        assert dist.overlap == pytest.approx(1.0)

    def test_masses_sum_to_one(self):
        rng = np.random.Generator(np.random.PCG64(66))
        dist = score_distribution(rng.normal(size=100), rng.normal(size=50))
        assert np.sum(dist.pos_mass) == pytest.approx(1.0)
        assert np.sum(dist.neg_mass) == pytest.approx(1.0)
        assert 0.0 <= dist.overlap <= 1.0

    def test_empty_class_is_error(self):
        with pytest.raises(UndefinedMetricError):
            score_distribution([], [0.5])


def test_confusion_from_counts():
    counts = confusion_from([1, 1, 0, 0, 0], [1, 0, 0, 1, 0])
    assert (counts.tp, counts.fn, counts.tn, counts.fp) == (1, 1, 2, 1)
    assert counts.n_positive == 2 and counts.n_negative == 3
