"""Group-fairness penalties and evaluation metrics against hand values and
independent brute-force oracles."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairssl_lab.fairness import (GroupMoments, MetricError, RescaleThresholds,
                                  dp_gap, entropy_penalty, eod_gap, eop_gap,
                                  group_moments, macro_f1, metric_report,
                                  micro_f1, per_label_f1, rescale_thresholds,
                                  saturation_detect, simfair_penalty)

LN2 = float(np.log(2.0))


def simfair_brute(probs, groups, n_groups, mask=None, squared=False):
    """Loop-based recomputation of the between-group dispersion penalty."""
    p = np.asarray(probs, float)
    n, L = p.shape
    m = np.ones_like(p) if mask is None else np.asarray(mask, float)
    total = 0.0
    for k in range(n_groups):
        sq = 0.0
        for l in range(L):
            if m[:, l].sum() == 0:
                continue
            mu_l = (p[:, l] * m[:, l]).sum() / m[:, l].sum()
            rows = groups == k
            if m[rows, l].sum() == 0:
                continue
            mu_kl = (p[rows, l] * m[rows, l]).sum() / m[rows, l].sum()
            sq += (mu_l - mu_kl) ** 2
        total += sq if squared else np.sqrt(sq)
    return total


def dp_brute(preds, groups, n_groups):
    p = np.asarray(preds, float)
    overall = p.mean(axis=0)
    total = 0.0
    for k in range(n_groups):
        mu = p[groups == k].mean(axis=0)
        total += float(np.sqrt(((overall - mu) ** 2).sum()))
    return total


def f1_brute(preds, y):
    """Precision/recall route to per-label F1."""
    p = np.asarray(preds, bool)
    t = np.asarray(y, bool)
    out = []
    for l in range(p.shape[1]):
        tp = int((p[:, l] & t[:, l]).sum())
        fp = int((p[:, l] & ~t[:, l]).sum())
        fn = int((~p[:, l] & t[:, l]).sum())
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        out.append(2 * prec * rec / (prec + rec) if prec + rec else 0.0)
    return out


class TestSimfair:
    def test_two_group_means_give_point_two(self):
        # group means 0.4 and 0.6 around an overall 0.5
        probs = np.array([[0.3], [0.5], [0.5], [0.7]])
        groups = np.array([0, 0, 1, 1])
        pen = simfair_penalty(probs, groups, 2)
        assert pen.value == pytest.approx(0.2, abs=1e-12)
        assert pen.skipped == [] and not pen.degenerate

    def test_squared_variant(self):
        probs = np.array([[0.3], [0.5], [0.5], [0.7]])
        groups = np.array([0, 0, 1, 1])
        pen = simfair_penalty(probs, groups, 2, squared=True)
        assert pen.value == pytest.approx(0.02, abs=1e-12)

    def test_identical_means_give_zero(self):
        probs = np.tile(np.array([[0.2, 0.8]]), (6, 1))
        groups = np.array([0, 1] * 3)
        pen = simfair_penalty(probs, groups, 2)
        assert pen.value == 0.0
        np.testing.assert_array_equal(pen.grad, np.zeros_like(probs))

    def test_matches_brute_force(self, rng):
        for trial in range(25):
            n, L, K = rng.integers(4, 30), rng.integers(1, 4), rng.integers(2, 4)
            probs = rng.random((n, L))
            groups = rng.integers(0, K, n)
            mask = (rng.random((n, L)) < 0.7).astype(float)
            squared = bool(trial % 2)
            pen = simfair_penalty(probs, groups, K, mask=mask, squared=squared)
            want = simfair_brute(probs, groups, K, mask, squared)
            assert pen.value == pytest.approx(want, abs=1e-12)

    @pytest.mark.parametrize("squared", [False, True])
    def test_grad_matches_finite_differences(self, rng, squared):
        probs = 0.1 + 0.8 * rng.random((20, 3))
        groups = rng.integers(0, 2, 20)
        mask = (rng.random((20, 3)) < 0.8).astype(float)
        pen = simfair_penalty(probs, groups, 2, mask=mask, squared=squared)
        eps = 1e-6
        fd = np.zeros_like(probs)
        for idx in np.ndindex(*probs.shape):
            up = probs.copy(); up[idx] += eps
            dn = probs.copy(); dn[idx] -= eps
            fd[idx] = (simfair_penalty(up, groups, 2, mask=mask, squared=squared).value
                       - simfair_penalty(dn, groups, 2, mask=mask, squared=squared).value
                       ) / (2 * eps)
        assert float(np.max(np.abs(pen.grad - fd))) < 1e-6

    def test_skips_and_flags_empty_cell(self):
        probs = np.array([[0.9, 0.1], [0.8, 0.2], [0.3, 0.7]])
        groups = np.array([0, 0, 1])
        mask = np.array([[1.0, 1.0], [1.0, 1.0], [0.0, 1.0]])  # group 1 empty on dim 0
        pen = simfair_penalty(probs, groups, 2, mask=mask)
        assert (1, 0) in pen.skipped
        assert np.isfinite(pen.value) and not pen.degenerate

    def test_all_masked_is_degenerate(self):
        pen = simfair_penalty(np.full((4, 2), 0.5), np.array([0, 0, 1, 1]), 2,
                              mask=np.zeros((4, 2)))
        assert pen.degenerate and pen.value == 0.0

    def test_needs_two_groups(self):
        with pytest.raises(MetricError):
            simfair_penalty(np.full((3, 1), 0.5), np.zeros(3, int), 1)


class TestGroupMoments:
    def test_recomposition(self, rng):
        vals = rng.random((50, 3))
        groups = rng.integers(0, 3, 50)
        groups[:3] = [0, 1, 2]
        mom = group_moments(vals, groups, 3)
        recomposed = (mom.counts[:, None] * mom.per_group).sum(axis=0) / 50
        np.testing.assert_allclose(recomposed, mom.overall, atol=1e-10)

    def test_empty_group_named(self):
        with pytest.raises(MetricError, match="group 2"):
            group_moments(np.zeros((4, 1)), np.array([0, 0, 1, 1]), 3)


class TestEntropy:
    def test_half_is_log_two(self):
        pen = entropy_penalty(np.array([[0.5]]))
        assert pen.value == pytest.approx(LN2, rel=1e-12)

    def test_point_nine(self):
        pen = entropy_penalty(np.array([[0.9]]))
        assert pen.value == pytest.approx(0.3251, abs=1e-4)

    def test_clamped_entries_get_zero_grad(self):
        pen = entropy_penalty(np.array([[0.0, 1.0, 0.5]]))
        assert pen.grad[0, 0] == 0.0 and pen.grad[0, 1] == 0.0
        assert pen.grad[0, 2] == 0.0  # symmetric point
        assert np.isfinite(pen.value)

    def test_grad_matches_finite_differences(self, rng):
        probs = 0.05 + 0.9 * rng.random((7, 2))
        pen = entropy_penalty(probs)
        eps = 1e-7
        fd = np.zeros_like(probs)
        for idx in np.ndindex(*probs.shape):
            up = probs.copy(); up[idx] += eps
            dn = probs.copy(); dn[idx] -= eps
            fd[idx] = (entropy_penalty(up).value - entropy_penalty(dn).value) / (2 * eps)
        np.testing.assert_allclose(pen.grad, fd, atol=1e-6)


class TestDpGap:
    def test_two_group_rates_give_point_two(self):
        # selection rates 0.4 and 0.6, equal group sizes
        preds = np.array([[0], [0], [0], [1], [1], [0], [0], [1], [1], [1]])
        groups = np.array([0] * 5 + [1] * 5)
        assert dp_gap(preds, groups, 2) == pytest.approx(0.2, abs=1e-12)

    def test_matches_brute_force(self, rng):
        for _ in range(25):
            n, L, K = int(rng.integers(6, 50)), int(rng.integers(1, 5)), int(rng.integers(2, 4))
            preds = (rng.random((n, L)) < 0.5).astype(float)
            groups = rng.integers(0, K, n)
            groups[:K] = np.arange(K)
            assert dp_gap(preds, groups, K) == pytest.approx(
                dp_brute(preds, groups, K), abs=1e-12)

    def test_empty_group_named(self):
        with pytest.raises(MetricError, match="group 1"):
            dp_gap(np.zeros((3, 1)), np.array([0, 0, 2]), 3)


@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_dp_gap_invariances(data):
    n = data.draw(st.integers(4, 24))
    preds = np.array(data.draw(st.lists(st.integers(0, 1), min_size=2 * n,
                                        max_size=2 * n))).reshape(n, 2)
    groups = np.array([0, 1] * (n // 2) + [0] * (n % 2))
    base = dp_gap(preds, groups, 2)
    perm = data.draw(st.permutations(range(n)))
    perm = np.array(perm)
    assert dp_gap(preds[perm], groups[perm], 2) == pytest.approx(base, abs=1e-12)
    assert dp_gap(preds, 1 - groups, 2) == pytest.approx(base, abs=1e-12)


class TestConditionalGaps:
    def _tpr_case(self):
        """TPRs 0.5 and 0.9 on equally sized positive strata."""
        y = np.ones((20, 1))
        preds = np.zeros((20, 1))
        preds[:5] = 1.0           # group 0: 5 of 10 positives predicted
        preds[10:19] = 1.0        # group 1: 9 of 10
        groups = np.array([0] * 10 + [1] * 10)
        return preds, y, groups

    def test_eop_hand_value(self):
        preds, y, groups = self._tpr_case()
        gap = eop_gap(preds, y, groups, 2)
        assert gap.value == pytest.approx(0.4, abs=1e-12)
        assert gap.skipped == []

    def test_eop_ignores_negatives(self):
        preds, y, groups = self._tpr_case()
        preds2 = np.vstack([preds, np.ones((6, 1))])
        y2 = np.vstack([y, np.zeros((6, 1))])
        groups2 = np.concatenate([groups, np.array([0, 1] * 3)])
        assert eop_gap(preds2, y2, groups2, 2).value == pytest.approx(0.4, abs=1e-12)

    def test_eod_identical_groups_is_zero(self):
        pattern = np.array([[1], [0], [1], [0]])
        y = np.array([[1], [1], [0], [0]])
        preds = np.vstack([pattern, pattern])
        ys = np.vstack([y, y])
        groups = np.array([0] * 4 + [1] * 4)
        gap = eod_gap(preds, ys, groups, 2)
        assert gap.value == pytest.approx(0.0, abs=1e-12)

    def test_eod_averages_both_outcomes(self):
        preds, y, groups = self._tpr_case()
        # add negatives with identical false-positive rates in both groups
        preds2 = np.vstack([preds, np.array([[1.0], [0.0], [1.0], [0.0]])])
        y2 = np.vstack([y, np.zeros((4, 1))])
        groups2 = np.concatenate([groups, np.array([0, 0, 1, 1])])
        gap = eod_gap(preds2, y2, groups2, 2)
        assert gap.value == pytest.approx(0.2, abs=1e-12)  # (0.4 + 0.0) / 2

    def test_missing_stratum_skipped_and_counted(self):
        # label 1 has positives only in group 0
        y = np.array([[1, 1], [1, 1], [1, 0], [1, 0]])
        preds = np.array([[1, 1], [0, 0], [1, 0], [0, 0]])
        groups = np.array([0, 0, 1, 1])
        gap = eop_gap(preds, y, groups, 2)
        assert (1, 1, 1) in gap.skipped
        assert np.isfinite(gap.value)

    def test_no_positives_anywhere_is_an_error(self):
        with pytest.raises(MetricError, match="outcome 1"):
            eop_gap(np.zeros((4, 1)), np.zeros((4, 1)), np.array([0, 0, 1, 1]), 2)


class TestRescale:
    def test_quantile_matches_prevalence(self):
        scores = np.linspace(0.0, 1.0, 101)[:, None]
        y = np.zeros((101, 1))
        y[:25] = 1.0  # prevalence ~ 0.25
        res = rescale_thresholds(scores, y)
        assert res.thresholds[0] == pytest.approx(0.75, abs=0.02)
        assert not res.fallback[0]
        rate = float((scores >= res.thresholds[0]).mean())
        assert rate == pytest.approx(0.25, abs=0.02)

    def test_constant_scores_fall_back(self):
        scores = np.full((40, 1), 0.37)
        y = np.zeros((40, 1)); y[:10] = 1.0
        res = rescale_thresholds(scores, y)
        assert res.fallback[0] and res.thresholds[0] == 0.5

    @pytest.mark.parametrize("prev", [0.0, 1.0])
    def test_degenerate_prevalence_falls_back(self, prev, rng):
        scores = rng.random((40, 1))
        y = np.full((40, 1), prev)
        res = rescale_thresholds(scores, y)
        assert res.fallback[0] and res.thresholds[0] == 0.5


class TestF1:
    def test_hand_confusion(self):
        # TP=2 FP=1 FN=1 -> 2*2 / (2*2 + 1 + 1)
        preds = np.array([[1], [1], [1], [0], [0]])
        y = np.array([[1], [1], [0], [1], [0]])
        f1, degen = per_label_f1(preds, y)
        assert f1[0] == pytest.approx(2 / 3, abs=1e-12)
        assert not degen[0]

    def test_degenerate_label_flagged(self):
        preds = np.zeros((4, 2)); preds[:, 1] = [1, 0, 1, 0]
        y = np.zeros((4, 2)); y[:, 1] = [1, 0, 0, 1]
        f1, degen = per_label_f1(preds, y)
        assert degen[0] and not degen[1]
        assert f1[0] == 0.0

    def test_matches_brute_force(self, rng):
        for _ in range(25):
            n, L = int(rng.integers(4, 40)), int(rng.integers(1, 5))
            preds = (rng.random((n, L)) < 0.5)
            y = (rng.random((n, L)) < 0.5)
            f1, _ = per_label_f1(preds, y)
            np.testing.assert_allclose(f1, f1_brute(preds, y), atol=1e-12)
            assert macro_f1(preds, y) == pytest.approx(np.mean(f1_brute(preds, y)))
            tp = int((preds & y).sum()); fp = int((preds & ~y).sum())
            fn = int((~preds & y).sum())
            want = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else 0.0
            assert micro_f1(preds, y) == pytest.approx(want, abs=1e-12)


class TestSaturation:
    def test_constant_probs_saturate(self, rng):
        probs = np.full((40, 2), 0.8) + 1e-4 * rng.standard_normal((40, 2))
        res = saturation_detect(probs)
        assert res.saturated

    def test_spread_probs_do_not(self, rng):
        probs = rng.random((40, 2))
        assert not saturation_detect(probs).saturated

    def test_needs_thirty_rows(self, rng):
        with pytest.raises(MetricError, match="30"):
            saturation_detect(rng.random((29, 2)))

    def test_half_the_labels_is_enough(self, rng):
        probs = np.empty((40, 2))
        probs[:, 0] = 0.7
        probs[:, 1] = rng.random(40)
        res = saturation_detect(probs)
        assert res.saturated
        assert res.per_label_std[0] < 0.01 < res.per_label_std[1]


class TestMetricReport:
    def _inputs(self, rng):
        n = 40
        probs = 0.05 + 0.9 * rng.random((n, 2))
        y = np.zeros((n, 2))
        y[:, 0] = (np.arange(n) % 2 == 0)
        y[:, 1] = (np.arange(n) % 4 < 2)
        groups = np.arange(n) % 2
        thr = RescaleThresholds(thresholds=np.array([0.3, 0.7]),
                                fallback=np.array([False, True]))
        return probs, y, groups, thr

    def test_threshold_split_between_families(self, rng):
        probs, y, groups, thr = self._inputs(rng)
        rep = metric_report(probs, y, groups, 2, thr, primary_dim=0)
        preds_f1 = probs >= thr.thresholds[None, :]
        preds_fair = probs >= 0.5
        assert rep.macro_f1 == pytest.approx(macro_f1(preds_f1, y), abs=1e-12)
        assert rep.micro_f1 == pytest.approx(micro_f1(preds_fair, y), abs=1e-12)
        assert rep.dp_gap == pytest.approx(dp_gap(preds_fair, groups, 2), abs=1e-12)
        assert rep.eop_gap == pytest.approx(
            eop_gap(preds_fair, y, groups, 2).value, abs=1e-12)
        assert rep.threshold_fallbacks == 1

    def test_per_dim_fields(self, rng):
        probs, y, groups, thr = self._inputs(rng)
        rep = metric_report(probs, y, groups, 2, thr, primary_dim=1)
        assert len(rep.per_dim_dp) == 2 and len(rep.per_dim_f1) == 2
        assert rep.binary_dp == rep.per_dim_dp[1]
        assert rep.binary_eod == rep.per_dim_eod[1]
        preds_fair = probs >= 0.5
        for l in range(2):
            assert rep.per_dim_dp[l] == pytest.approx(
                dp_gap(preds_fair[:, [l]], groups, 2), abs=1e-12)

    def test_primary_dim_range_checked(self, rng):
        probs, y, groups, thr = self._inputs(rng)
        with pytest.raises(MetricError, match="primary dimension"):
            metric_report(probs, y, groups, 2, thr, primary_dim=2)

    def test_to_dict_is_json_friendly(self, rng):
        import json
        probs, y, groups, thr = self._inputs(rng)
        rep = metric_report(probs, y, groups, 2, thr)
        json.dumps(rep.to_dict())
