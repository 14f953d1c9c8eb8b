"""Evaluation metric tests, each checked against a brute-force oracle."""

import numpy as np
import pytest

from priorart.exceptions import ParameterError, ValidationError
from priorart.measures import ScoredPair
from priorart.metrics import (
    ConfusionMatrix,
    auc,
    auc_from_scores,
    average_precision,
    average_precision_from_scores,
    confusion_at_threshold,
    confusion_metrics,
    evaluate_scored_pairs,
    roc_curve,
    score_histograms,
    spearman_rho,
    trapezoid_area,
)


def pairs(labels, scores):
    return [ScoredPair("T", f"D{i}", lab, s) for i, (lab, s) in enumerate(zip(labels, scores))]


def brute_force_auc(y, scores):
    """Enumerate all positive/negative comparisons with half tie credit."""
    pos = [s for s, flag in zip(scores, y) if flag]
    neg = [s for s, flag in zip(scores, y) if not flag]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


def sweep_average_precision(y, scores):
    """Threshold-sweep AP: iterate every rank, accumulate (R_n - R_{n-1}) P_n."""
    order = np.argsort(-np.asarray(scores), kind="mergesort")
    n_pos = int(np.asarray(y)[order].sum())
    ap = 0.0
    tp = 0
    recall_prev = 0.0
    for n, idx in enumerate(order, start=1):
        tp += bool(y[idx])
        recall = tp / n_pos
        ap += (recall - recall_prev) * (tp / n)
        recall_prev = recall
    return ap


def rank_then_pearson(a, b):
    """Independent Spearman oracle: average ranks, then np.corrcoef."""

    def ranks(values):
        values = np.asarray(values, dtype=float)
        order = np.argsort(values, kind="mergesort")
        out = np.empty(len(values))
        i = 0
        while i < len(values):
            j = i
            while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
                j += 1
            out[order[i:j + 1]] = np.mean(np.arange(i, j + 1) + 1)
            i = j + 1
        return out

    return float(np.corrcoef(ranks(a), ranks(b))[0, 1])


class TestAuc:
    def test_perfect_separation(self):
        scored = pairs(["cited", "cited", "random", "random"], [0.9, 0.8, 0.2, 0.1])
        assert auc(scored, "cited") == 1.0

    def test_tie_convention(self):
        scored = pairs(["cited", "random"], [0.5, 0.5])
        assert auc(scored, "cited") == 0.5

    def test_four_score_enumeration(self):
        scored = pairs(["cited", "cited", "random", "random"], [0.8, 0.4, 0.6, 0.2])
        assert auc(scored, "cited") == 0.75

    def test_single_class_rejected(self):
        with pytest.raises(ValidationError):
            auc(pairs(["cited", "cited"], [0.1, 0.2]), "cited")

    def test_matches_brute_force_with_ties(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(4, 40))
            y = rng.random(n) < 0.5
            if y.all() or not y.any():
                continue
            scores = rng.integers(0, 6, size=n).astype(float)  # force ties
            assert auc_from_scores(y, scores) == pytest.approx(
                brute_force_auc(y, scores), abs=1e-12)

    def test_monotone_invariance(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            n = int(rng.integers(5, 60))
            y = rng.random(n) < 0.4
            if y.all() or not y.any():
                continue
            scores = rng.standard_normal(n)
            base = auc_from_scores(y, scores)
            assert auc_from_scores(y, 2 * scores + 1) == base
            assert auc_from_scores(y, scores ** 3) == base

    def test_complement_under_negation(self):
        rng = np.random.default_rng(2)
        y = rng.random(30) < 0.5
        y[0], y[1] = True, False
        scores = rng.permutation(np.arange(30, dtype=float))  # tie-free
        assert auc_from_scores(y, scores) + auc_from_scores(y, -scores) == pytest.approx(1.0)


class TestRocCurve:
    def test_perfect_separation_path(self):
        scored = pairs(["cited", "cited", "random"], [0.9, 0.8, 0.1])
        assert roc_curve(scored, "cited") == [(0.0, 0.0), (0.0, 0.5), (0.0, 1.0), (1.0, 1.0)]

    def test_all_tied_diagonal(self):
        scored = pairs(["cited", "random"], [0.3, 0.3])
        assert roc_curve(scored, "cited") == [(0.0, 0.0), (1.0, 1.0)]

    def test_endpoints_and_monotonicity(self):
        rng = np.random.default_rng(3)
        labels = ["cited" if f else "random" for f in rng.random(50) < 0.5]
        labels[0], labels[1] = "cited", "random"
        scored = pairs(labels, rng.integers(0, 8, size=50).astype(float))
        points = roc_curve(scored, "cited")
        assert points[0] == (0.0, 0.0) and points[-1] == (1.0, 1.0)
        for (x0, y0), (x1, y1) in zip(points, points[1:]):
            assert x1 >= x0 and y1 >= y0

    def test_trapezoid_area_equals_auc(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            n = int(rng.integers(5, 80))
            labels = ["cited" if f else "random" for f in rng.random(n) < 0.5]
            if "cited" not in labels or "random" not in labels:
                continue
            scored = pairs(labels, rng.integers(0, 10, size=n).astype(float))
            assert trapezoid_area(roc_curve(scored, "cited")) == pytest.approx(
                auc(scored, "cited"), abs=1e-12)

    def test_four_score_area(self):
        scored = pairs(["cited", "cited", "random", "random"], [0.8, 0.4, 0.6, 0.2])
        assert trapezoid_area(roc_curve(scored, "cited")) == pytest.approx(0.75, abs=1e-12)


class TestAveragePrecision:
    def test_hand_example(self):
        scored = pairs(["cited", "random", "cited", "random"], [0.9, 0.8, 0.7, 0.6])
        assert average_precision(scored, "cited") == pytest.approx(0.5 + 0.5 * (2 / 3), abs=1e-12)
        assert average_precision(scored, "cited") == pytest.approx(0.8333, abs=5e-5)

    def test_all_positives_first(self):
        scored = pairs(["cited", "cited", "random"], [0.9, 0.8, 0.1])
        assert average_precision(scored, "cited") == 1.0

    def test_single_positive_ranked_last(self):
        for k in (2, 5, 9):
            labels = ["random"] * (k - 1) + ["cited"]
            scores = list(np.linspace(1.0, 0.1, k))
            assert average_precision(pairs(labels, scores), "cited") == pytest.approx(1 / k)

    def test_no_positive_rejected(self):
        with pytest.raises(ValidationError):
            average_precision(pairs(["random"], [0.1]), "cited")

    def test_matches_threshold_sweep_oracle_exactly(self):
        rng = np.random.default_rng(5)
        done = 0
        while done < 100:
            n = int(rng.integers(3, 60))
            y = rng.random(n) < 0.4
            if not y.any():
                continue
            scores = rng.integers(0, 10, size=n).astype(float)  # with ties
            assert average_precision_from_scores(y, scores) == sweep_average_precision(y, scores)
            done += 1

    def test_perfect_iff_positives_outrank(self):
        rng = np.random.default_rng(6)
        for _ in range(30):
            n = int(rng.integers(4, 30))
            y = rng.random(n) < 0.5
            if y.all() or not y.any():
                continue
            scores = rng.permutation(np.arange(n, dtype=float))
            ap = average_precision_from_scores(y, scores)
            separated = min(scores[y]) > max(scores[~y])
            assert (ap == 1.0) == separated


class TestConfusion:
    def test_reference_counts(self):
        metrics = confusion_metrics(ConfusionMatrix(tp=65, fn=18, fp=86, tn=281))
        assert metrics["recall"] == pytest.approx(0.7831, abs=5e-5)
        assert metrics["precision"] == pytest.approx(0.4305, abs=5e-5)

    def test_undefined_marker(self):
        metrics = confusion_metrics(ConfusionMatrix(tp=0, fp=0, fn=3, tn=5))
        assert metrics["precision"] is None
        assert metrics["recall"] == 0.0

    def test_zero_fpr(self):
        metrics = confusion_metrics(ConfusionMatrix(tp=1, fp=0, fn=1, tn=4))
        assert metrics["fpr"] == 0.0
        assert metrics["fnr"] == 0.5

    def test_empty_rejected(self):
        with pytest.raises(ParameterError):
            ConfusionMatrix(0, 0, 0, 0)

    def test_confusion_at_threshold(self):
        scored = pairs(["cited", "cited", "random", "random"], [0.9, 0.4, 0.6, 0.1])
        cm = confusion_at_threshold(scored, 0.5, "cited", "random")
        assert (cm.tp, cm.fp, cm.fn, cm.tn) == (1, 1, 1, 1)


class TestSpearman:
    def test_identical_and_reversed(self):
        assert spearman_rho([1, 2, 3], [10, 20, 30]) == pytest.approx(1.0)
        assert spearman_rho([1, 2, 3], [9, 5, 1]) == pytest.approx(-1.0)

    def test_hand_example(self):
        assert spearman_rho([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-12)

    def test_constant_input_marker(self):
        assert spearman_rho([1, 1, 1], [1, 2, 3]) is None

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            spearman_rho([1, 2], [1, 2, 3])

    def test_matches_rank_then_pearson_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(60):
            n = int(rng.integers(3, 50))
            a = rng.integers(0, 8, size=n).astype(float)  # ties likely
            b = rng.integers(0, 8, size=n).astype(float)
            if len(set(a)) < 2 or len(set(b)) < 2:
                continue
            assert spearman_rho(a, b) == pytest.approx(rank_then_pearson(a, b), abs=1e-12)

    def test_invariance_under_increasing_transform(self):
        rng = np.random.default_rng(8)
        a = rng.standard_normal(40)
        b = rng.standard_normal(40)
        base = spearman_rho(a, b)
        assert spearman_rho(np.exp(a), b) == pytest.approx(base, abs=1e-12)
        assert spearman_rho(a, 3 * b + 2) == pytest.approx(base, abs=1e-12)


class TestHistograms:
    def test_single_occupied_bin_when_constant(self):
        hist = score_histograms(pairs(["cited"] * 4, [0.5] * 4), bins=10)
        occupied = [n for n in hist.counts["cited"] if n > 0]
        assert occupied == [4]

    def test_counts_sum_to_label_totals(self):
        rng = np.random.default_rng(9)
        labels = ["cited" if f else "random" for f in rng.random(200) < 0.3]
        scored = pairs(labels, rng.random(200))
        hist = score_histograms(scored, bins=20)
        assert sum(hist.counts["cited"]) == labels.count("cited")
        assert sum(hist.counts["random"]) == labels.count("random")

    def test_csv_export(self, tmp_path):
        hist = score_histograms(pairs(["cited", "random"], [0.1, 0.9]), bins=4)
        path = tmp_path / "hist.csv"
        hist.save(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "bin_lo,bin_hi,cited,random"
        assert len(lines) == 5

    def test_bins_validated(self):
        with pytest.raises(ParameterError):
            score_histograms([], bins=0)


class TestEvalReport:
    def test_report_shape_and_roundtrip(self, tmp_path):
        scored = pairs(["cited", "cited", "random", "random"], [0.8, 0.4, 0.6, 0.2])
        report = evaluate_scored_pairs(scored, "cited", "random",
                                       measure="coefficient:cosine", dataset_kind="cited_random")
        assert report.auc == 0.75
        assert report.n_pos == 2 and report.n_neg == 2
        assert report.roc_points[0] == (0.0, 0.0) and report.roc_points[-1] == (1.0, 1.0)
        path = tmp_path / "report.json"
        report.save(path)
        import json

        data = json.loads(path.read_text())
        assert data["auc"] == 0.75
        assert data["measure"] == "coefficient:cosine"
