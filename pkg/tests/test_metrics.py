import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ovabench.metrics import (PredictionRecord, accuracy_vs_confidence, auroc_auprc,
                              boxplot_stats, confidence_histograms, ece, pca2,
                              read_predictions, write_predictions)


def rec(confidence, correct=True, ood=False):
    if ood:
        return PredictionRecord(confidence=confidence, predicted_label=0, true_label=None)
    return PredictionRecord(confidence=confidence, predicted_label=0,
                            true_label=0 if correct else 1)


class TestEce:
    def test_perfectly_calibrated_bin(self):
        records = [rec(0.75, True), rec(0.75, True), rec(0.75, True), rec(0.75, False)]
        value, _ = ece(records, 15)
        assert value == 0.0

    def test_single_bin_hand_case(self):
        records = [rec(0.9, True), rec(0.9, True), rec(0.9, True), rec(0.9, False)]
        value, table = ece(records, 15)
        # scalar re-derivation of the same quantity
        mean_conf = (0.9 + 0.9 + 0.9 + 0.9) / 4
        acc = 3 / 4
        assert value == abs(acc - mean_conf)
        assert value == pytest.approx(0.15, abs=1e-12)
        assert table.counts.sum() == 4

    def test_confidence_one_lands_in_top_bin(self):
        records = [rec(1.0, True) for _ in range(5)]
        value, table = ece(records, 15)
        assert value == 0.0
        assert table.counts[14] == 5
        assert table.counts[:14].sum() == 0

    def test_interior_edge_goes_to_higher_bin(self):
        edge = np.linspace(0.0, 1.0, 16)[3]
        _, table = ece([rec(float(edge))], 15)
        assert table.counts[3] == 1

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            ece([], 15)

    def test_ood_rejected(self):
        with pytest.raises(ValueError, match="in-distribution"):
            ece([rec(0.5, ood=True)], 15)

    @settings(max_examples=50)
    @given(st.lists(st.tuples(st.floats(0, 1), st.booleans()), min_size=1, max_size=40),
           st.randoms(use_true_random=False))
    def test_permutation_invariance(self, pairs, rnd):
        records = [rec(c, ok) for c, ok in pairs]
        value, _ = ece(records, 15)
        shuffled = list(records)
        rnd.shuffle(shuffled)
        value2, _ = ece(shuffled, 15)
        assert value2 == pytest.approx(value, abs=1e-12)

    @settings(max_examples=50)
    @given(st.lists(st.tuples(st.floats(0.401, 0.465), st.booleans()),
                    min_size=1, max_size=30))
    def test_single_bin_equals_gap_exactly(self, pairs):
        # all confidences inside one 1/15-wide bin
        records = [rec(c, ok) for c, ok in pairs]
        value, _ = ece(records, 15)
        conf_total, correct_total = 0.0, 0.0
        for r in records:  # left-to-right accumulation, as the binned sums do
            conf_total += r.confidence
            correct_total += 1.0 if r.is_correct else 0.0
        assert value == abs(correct_total / len(records) - conf_total / len(records))

    def test_mean_confidence_within_bin_edges(self):
        rng = np.random.default_rng(0)
        records = [rec(float(c), bool(rng.integers(2))) for c in rng.uniform(0, 1, 500)]
        _, table = ece(records, 15)
        for b in range(15):
            if table.counts[b]:
                assert table.bin_edges[b] - 1e-12 <= table.mean_confidence[b]
                assert table.mean_confidence[b] <= table.bin_edges[b + 1] + 1e-12


class TestAccuracyVsConfidence:
    def test_all_correct_full_confidence(self):
        records = [rec(1.0, True) for _ in range(4)]
        curve = accuracy_vs_confidence(records, np.linspace(0, 1, 11))
        assert (curve.accuracy == 1.0).all()
        assert (curve.retained == 4).all()

    def test_ood_counted_incorrect(self):
        records = [rec(0.9, True), rec(0.9, True), rec(0.95, ood=True)]
        curve = accuracy_vs_confidence(records, [0.92])
        assert curve.retained[0] == 1
        assert curve.accuracy[0] == 0.0

    def test_zero_threshold_is_overall_accuracy(self):
        records = [rec(0.9, True), rec(0.9, True), rec(0.95, ood=True)]
        curve = accuracy_vs_confidence(records, [0.0])
        assert curve.retained[0] == 3
        assert curve.accuracy[0] == pytest.approx(2 / 3)

    def test_empty_retention_is_nan_not_zero(self):
        records = [rec(0.2, True)]
        curve = accuracy_vs_confidence(records, [0.5])
        assert curve.retained[0] == 0
        assert math.isnan(curve.accuracy[0])

    def test_retained_nonincreasing(self):
        rng = np.random.default_rng(1)
        records = [rec(float(c), True) for c in rng.uniform(0, 1, 100)]
        curve = accuracy_vs_confidence(records, np.linspace(0, 1, 101))
        assert (np.diff(curve.retained) <= 0).all()

    def test_threshold_above_max_ood_confidence_excludes_ood(self):
        records = [rec(0.8, True), rec(0.99, True), rec(0.6, ood=True), rec(0.7, ood=True)]
        curve = accuracy_vs_confidence(records, [0.7000000001])
        assert curve.retained[0] == 2
        assert curve.accuracy[0] == 1.0


def brute_force_auroc(scores, is_positive):
    pos = [s for s, p in zip(scores, is_positive) if p]
    neg = [s for s, p in zip(scores, is_positive) if not p]
    total = 0.0
    for ps in pos:
        for ns in neg:
            if ps > ns:
                total += 1.0
            elif ps == ns:
                total += 0.5
    return total / (len(pos) * len(neg))


class TestRanking:
    def test_perfect_separation(self):
        r = auroc_auprc([0.9, 0.8, 0.2, 0.1], [True, True, False, False])
        assert r.auroc == 1.0
        assert r.auprc == 1.0

    def test_all_ties_is_half(self):
        r = auroc_auprc([0.5] * 6, [True, False, True, False, True, False])
        assert r.auroc == 0.5
        assert r.auprc == 0.5  # precision = prevalence at the single threshold

    def test_hand_case_three_quarters(self):
        r = auroc_auprc([0.9, 0.8, 0.7, 0.6], [True, False, True, False])
        assert r.auroc == pytest.approx(0.75, abs=1e-15)
        assert r.auroc == pytest.approx(
            brute_force_auroc([0.9, 0.8, 0.7, 0.6], [True, False, True, False]), abs=1e-15)

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            auroc_auprc([0.1, 0.2], [True, True])

    def test_curve_endpoints_and_monotonicity(self):
        rng = np.random.default_rng(2)
        scores = rng.uniform(0, 1, 50).round(2)  # force some ties
        labels = rng.integers(0, 2, 50).astype(bool)
        labels[0], labels[1] = True, False
        r = auroc_auprc(scores, labels)
        assert r.roc_points[0] == (0.0, 0.0)
        assert r.roc_points[-1] == (1.0, 1.0)
        xs = [p[0] for p in r.roc_points]
        ys = [p[1] for p in r.roc_points]
        assert (np.diff(xs) >= 0).all() and (np.diff(ys) >= 0).all()

    @settings(max_examples=60)
    @given(st.lists(st.tuples(st.sampled_from([round(v * 0.05, 2) for v in range(21)]),
                              st.booleans()), min_size=2, max_size=60))
    def test_matches_brute_force(self, pairs):
        scores = [s for s, _ in pairs]
        labels = [l for _, l in pairs]
        if not (any(labels) and not all(labels)):
            return
        r = auroc_auprc(scores, labels)
        assert abs(r.auroc - brute_force_auroc(scores, labels)) < 1e-12

    def test_auprc_hand_case(self):
        # descending: 0.9 pos, 0.8 neg, 0.7 pos, 0.6 neg
        # recall steps: 0.5 @ precision 1/1, then 1.0 @ precision 3/4... wait:
        # thresholds: 0.9 -> P=1/1 R=1/2 ; 0.8 -> P=1/2 R=1/2 ; 0.7 -> P=2/3 R=1 ; 0.6 -> P=2/4 R=1
        # AP = (0.5-0)*1 + (0.5-0.5)*0.5 + (1-0.5)*2/3 + 0 = 0.5 + 1/3
        r = auroc_auprc([0.9, 0.8, 0.7, 0.6], [True, False, True, False])
        assert r.auprc == pytest.approx(0.5 + 1.0 / 3.0, abs=1e-12)


class TestHistograms:
    def test_empty_ood_list(self):
        h = confidence_histograms([0.5, 0.9], [0.3], [], 10)
        assert h.ood.sum() == 0
        assert h.correct_id.sum() == 2
        assert h.incorrect_id.sum() == 1

    def test_all_half_one_bin(self):
        h = confidence_histograms([0.5] * 7, [0.5] * 3, [0.5] * 2, 10)
        assert h.correct_id[5] == 7 and h.correct_id.sum() == 7
        assert h.incorrect_id[5] == 3
        assert h.ood[5] == 2

    def test_matches_counting_loop(self):
        rng = np.random.default_rng(3)
        values = rng.uniform(0, 1, 300)
        h = confidence_histograms(values, [], [], 15)
        edges = np.linspace(0, 1, 16)
        manual = np.zeros(15, dtype=int)
        for v in values:
            b = 14
            for i in range(15):
                if edges[i] <= v < edges[i + 1]:
                    b = i
                    break
            manual[b] += 1
        assert np.array_equal(h.correct_id, manual)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            confidence_histograms([1.2], [], [], 10)


def oracle_five_numbers(values):
    """Sort-and-interpolate oracle, written independently of the implementation."""
    s = sorted(float(v) for v in values)
    n = len(s)

    def interp(q):
        pos = q * (n - 1)
        lower = int(math.floor(pos))
        frac = pos - lower
        if lower + 1 < n:
            return s[lower] + frac * (s[lower + 1] - s[lower])
        return s[lower]

    return s[0], interp(0.25), interp(0.5), interp(0.75), s[-1]


class TestBoxplot:
    def test_symmetric_odd_length(self):
        b = boxplot_stats([1, 2, 3, 4, 5])
        assert (b.minimum, b.q1, b.median, b.q3, b.maximum) == (1, 2, 3, 4, 5)

    def test_single_value(self):
        b = boxplot_stats([7.5])
        assert (b.minimum, b.q1, b.median, b.q3, b.maximum) == (7.5,) * 5

    def test_matches_oracle_exactly(self):
        rng = np.random.default_rng(4)
        for n in (2, 3, 4, 5, 8, 20, 37):
            values = rng.standard_normal(n) * 10
            b = boxplot_stats(values)
            assert (b.minimum, b.q1, b.median, b.q3, b.maximum) == oracle_five_numbers(values)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            boxplot_stats([])


def closed_form_symmetric3_eigs(a):
    """Trigonometric closed form for the eigenvalues of a symmetric 3x3."""
    p1 = a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2
    q = np.trace(a) / 3.0
    p2 = (a[0, 0] - q) ** 2 + (a[1, 1] - q) ** 2 + (a[2, 2] - q) ** 2 + 2 * p1
    p = math.sqrt(p2 / 6.0)
    b = (a - q * np.eye(3)) / p
    r = min(1.0, max(-1.0, np.linalg.det(b) / 2.0))
    phi = math.acos(r) / 3.0
    eig1 = q + 2 * p * math.cos(phi)
    eig3 = q + 2 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    return eig1, 3 * q - eig1 - eig3, eig3


class TestPca2:
    def test_recovers_exact_two_dim_subspace(self):
        rng = np.random.default_rng(5)
        base = np.zeros((200, 5))
        base[:, 0] = rng.standard_normal(200) * 4.0
        base[:, 1] = rng.standard_normal(200) * 1.5
        result = pca2(base)
        centered = base - base.mean(axis=0)
        residual = centered - result.points @ result.components.T
        assert np.abs(residual).max() < 1e-8

    def test_components_orthonormal(self):
        rng = np.random.default_rng(6)
        pts = rng.standard_normal((300, 6)) @ np.diag([5, 4, 3, 2, 1, 0.5])
        result = pca2(pts)
        gram = result.components.T @ result.components
        assert np.abs(gram - np.eye(2)).max() < 1e-8

    def test_sign_convention(self):
        rng = np.random.default_rng(7)
        pts = rng.standard_normal((100, 4)) * [6, 3, 1, 0.5]
        result = pca2(pts)
        for i in range(2):
            comp = result.components[:, i]
            assert comp[np.argmax(np.abs(comp))] > 0

    def test_isotropic_cloud_variance(self):
        rng = np.random.default_rng(8)
        pts = rng.standard_normal((2000, 4))
        result = pca2(pts)
        per_coord = pts.var(axis=0, ddof=1).mean()
        proj_var = result.points.var(axis=0, ddof=1)
        assert np.abs(proj_var - per_coord).max() < 0.1 * per_coord

    def test_three_dim_eigenvalues_match_cubic_roots(self):
        rng = np.random.default_rng(9)
        pts = rng.standard_normal((500, 3)) * [3.0, 2.0, 1.0]
        centered = pts - pts.mean(axis=0)
        cov = centered.T @ centered / (len(pts) - 1)
        roots = sorted(closed_form_symmetric3_eigs(cov), reverse=True)
        result = pca2(pts)
        assert result.eigenvalues[0] == pytest.approx(roots[0], rel=1e-9)
        assert result.eigenvalues[1] == pytest.approx(roots[1], rel=1e-9)

    def test_projection_variance_beats_random_frames(self):
        rng = np.random.default_rng(10)
        pts = rng.standard_normal((400, 6)) * [5, 4, 3, 2, 1, 0.5]
        result = pca2(pts)
        centered = pts - pts.mean(axis=0)
        best = result.points.var(axis=0, ddof=1).sum()
        for _ in range(100):
            frame, _ = np.linalg.qr(rng.standard_normal((6, 2)))
            random_var = (centered @ frame).var(axis=0, ddof=1).sum()
            assert best >= random_var - 1e-10

    def test_extra_points_share_centering(self):
        rng = np.random.default_rng(11)
        pts = rng.standard_normal((50, 3)) * [4, 2, 1] + [10, -5, 3]
        extras = pts[:4].copy()
        result = pca2(pts, extra_points=extras)
        assert np.allclose(result.extras, result.points[:4], atol=1e-12)

    def test_rank_deficient_rejected(self):
        line = np.outer(np.arange(10.0), [1.0, 2.0, 3.0])  # rank-1 cloud
        with pytest.raises(ValueError, match="nonzero eigenvalues"):
            pca2(line)

    def test_too_small_rejected(self):
        with pytest.raises(ValueError):
            pca2(np.zeros((2, 3)))


class TestPredictionsIo:
    def test_round_trip(self, tmp_path):
        records = [
            PredictionRecord(confidence=0.123456789012345, predicted_label=3, true_label=3),
            PredictionRecord(confidence=1.0, predicted_label=0, true_label=9),
            PredictionRecord(confidence=1e-17, predicted_label=2, true_label=None),
        ]
        path = tmp_path / "predictions.csv"
        write_predictions(path, records)
        loaded = read_predictions(path)
        assert len(loaded) == 3
        for a, b in zip(records, loaded):
            assert a.confidence == b.confidence
            assert a.predicted_label == b.predicted_label
            assert a.true_label == b.true_label

    def test_header_checked(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("nope\n")
        with pytest.raises(ValueError):
            read_predictions(path)
