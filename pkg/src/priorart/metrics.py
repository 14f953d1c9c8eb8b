"""Ranking and classification metrics for scored document pairs.

AUC follows the rank-statistic definition: the probability that a positive
outscores a negative, with half credit for ties. Average precision keeps
ties in stable input order, so its value is reproducible bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ParameterError, ValidationError
from .measures import ScoredPair


def _midranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the group average."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def _split_scores(scored, positive_label, negative_label):
    y, s = [], []
    for p in scored:
        if p.label == positive_label:
            y.append(True)
        elif negative_label is None or p.label == negative_label:
            y.append(False)
        else:
            continue
        s.append(p.score)
    return np.array(y, dtype=bool), np.array(s, dtype=float)


def auc_from_scores(y: np.ndarray, scores: np.ndarray) -> float:
    y = np.asarray(y, dtype=bool)
    scores = np.asarray(scores, dtype=float)
    n_pos = int(y.sum())
    n_neg = int(len(y) - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("AUC needs at least one positive and one negative")
    ranks = _midranks(scores)
    return float((ranks[y].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def auc(scored: list[ScoredPair], positive_label: str, negative_label: str | None = None) -> float:
    """Probability a positive pair outscores a negative one (ties half-count)."""
    y, scores = _split_scores(scored, positive_label, negative_label)
    return auc_from_scores(y, scores)


def roc_curve(
    scored: list[ScoredPair], positive_label: str, negative_label: str | None = None
) -> list[tuple[float, float]]:
    """(FPR, TPR) points, one per distinct threshold; tie groups are single steps.

    Starts at (0, 0), ends at (1, 1); the trapezoidal area under the points
    equals :func:`auc`.
    """
    y, scores = _split_scores(scored, positive_label, negative_label)
    n_pos = int(y.sum())
    n_neg = int(len(y) - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("ROC needs at least one positive and one negative")
    order = np.argsort(-scores, kind="mergesort")
    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        group = order[i : j + 1]
        tp += int(y[group].sum())
        fp += len(group) - int(y[group].sum())
        points.append((fp / n_neg, tp / n_pos))
        i = j + 1
    return points


def trapezoid_area(points: list[tuple[float, float]]) -> float:
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2
    return area


def average_precision(
    scored: list[ScoredPair], positive_label: str, negative_label: str | None = None
) -> float:
    """Recall-weighted precision over the descending-score ranking.

    Ties keep stable input order.
    """
    y, scores = _split_scores(scored, positive_label, negative_label)
    return average_precision_from_scores(y, scores)


def average_precision_from_scores(y: np.ndarray, scores: np.ndarray) -> float:
    y = np.asarray(y, dtype=bool)
    scores = np.asarray(scores, dtype=float)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise ValidationError("average precision needs at least one positive")
    order = np.argsort(-scores, kind="mergesort")
    ap = 0.0
    tp = 0
    recall_prev = 0.0
    for rank, idx in enumerate(order, start=1):
        if y[idx]:
            tp += 1
            recall = tp / n_pos
            ap += (recall - recall_prev) * (tp / rank)
            recall_prev = recall
    return float(ap)


@dataclass
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ParameterError("confusion matrix counts must be non-negative")
        if self.tp + self.fp + self.fn + self.tn == 0:
            raise ParameterError("confusion matrix is empty")


def confusion_metrics(cm: ConfusionMatrix) -> dict[str, float | None]:
    """Precision/recall/FPR/FNR; metrics with a zero denominator are None."""

    def ratio(num, den):
        return num / den if den else None

    return {
        "precision": ratio(cm.tp, cm.tp + cm.fp),
        "recall": ratio(cm.tp, cm.tp + cm.fn),
        "fpr": ratio(cm.fp, cm.fp + cm.tn),
        "fnr": ratio(cm.fn, cm.tp + cm.fn),
    }


def confusion_at_threshold(
    scored: list[ScoredPair], threshold: float, positive_label: str,
    negative_label: str | None = None,
) -> ConfusionMatrix:
    """Count decisions for `predict positive iff score > threshold`."""
    y, scores = _split_scores(scored, positive_label, negative_label)
    pred = scores > threshold
    return ConfusionMatrix(
        tp=int((pred & y).sum()),
        fp=int((pred & ~y).sum()),
        fn=int((~pred & y).sum()),
        tn=int((~pred & ~y).sum()),
    )


def spearman_rho(a, b) -> float | None:
    """Tie-corrected Spearman correlation; None when either side is constant."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValidationError(f"length mismatch: {a.shape} vs {b.shape}")
    if len(a) < 2:
        raise ValidationError("spearman_rho needs at least two observations")
    ra, rb = _midranks(a), _midranks(b)
    da, db = ra - ra.mean(), rb - rb.mean()
    denom = np.sqrt((da * da).sum() * (db * db).sum())
    if denom == 0.0:
        return None
    return float((da * db).sum() / denom)


@dataclass
class ScoreHistogram:
    """Per-label counts over equal-width score bins."""

    edges: list[float]
    counts: dict[str, list[int]]

    def save(self, path) -> None:
        import csv

        labels = sorted(self.counts)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin_lo", "bin_hi"] + labels)
            for b in range(len(self.edges) - 1):
                writer.writerow(
                    [f"{self.edges[b]:.9g}", f"{self.edges[b + 1]:.9g}"]
                    + [self.counts[lab][b] for lab in labels]
                )


def score_histograms(scored: list[ScoredPair], bins: int = 50) -> ScoreHistogram:
    """Equal-width histograms of scores, one count row per label."""
    if bins < 1:
        raise ParameterError(f"bins must be >= 1, got {bins}")
    if not scored:
        return ScoreHistogram(edges=[0.0, 1.0], counts={})
    scores = np.array([p.score for p in scored])
    lo, hi = float(scores.min()), float(scores.max())
    if hi == lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    counts: dict[str, list[int]] = {}
    for p in scored:
        label = p.label or "unlabeled"
        if label not in counts:
            counts[label] = [0] * bins
        idx = min(int((p.score - lo) / (hi - lo) * bins), bins - 1)
        counts[label][idx] += 1
    return ScoreHistogram(edges=[float(e) for e in edges], counts=counts)


@dataclass
class EvalReport:
    """Evaluation summary for one measure on one pair dataset."""

    measure: str
    dataset_kind: str
    positive_label: str
    auc: float
    ap: float
    n_pos: int
    n_neg: int
    roc_points: list[tuple[float, float]] = field(default_factory=list)
    confusion: dict[str, float | None] | None = None
    spearman: dict[str, float | None] | None = None
    config: dict | None = None

    def to_dict(self) -> dict:
        out = {
            "measure": self.measure,
            "dataset": self.dataset_kind,
            "positive_label": self.positive_label,
            "auc": self.auc,
            "ap": self.ap,
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
        }
        if self.confusion is not None:
            out["confusion"] = self.confusion
        if self.spearman is not None:
            out["spearman"] = self.spearman
        if self.config is not None:
            out["config"] = self.config
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    def save_roc(self, path) -> None:
        import csv

        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["fpr", "tpr"])
            for fpr, tpr in self.roc_points:
                writer.writerow([f"{fpr:.9g}", f"{tpr:.9g}"])


def evaluate_scored_pairs(
    scored: list[ScoredPair],
    positive_label: str,
    negative_label: str | None = None,
    measure: str = "",
    dataset_kind: str = "",
    config: dict | None = None,
) -> EvalReport:
    """Bundle AUC, AP, and the ROC curve into a report."""
    y, _ = _split_scores(scored, positive_label, negative_label)
    points = roc_curve(scored, positive_label, negative_label)
    return EvalReport(
        measure=measure,
        dataset_kind=dataset_kind,
        positive_label=positive_label,
        auc=auc(scored, positive_label, negative_label),
        ap=average_precision(scored, positive_label, negative_label),
        n_pos=int(y.sum()),
        n_neg=int(len(y) - y.sum()),
        roc_points=points,
        config=config,
    )
