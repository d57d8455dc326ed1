"""Calibration, ranking, and summary metrics over prediction records.

All metrics consume plain per-example records (confidence, predicted label,
true label or an out-of-distribution marker) so they can be recomputed from
the CSV prediction dumps the harness writes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ioutil import fmt_float, write_csv

__all__ = [
    "BoxplotStats",
    "CalibrationTable",
    "ConfidenceHistograms",
    "Pca2Result",
    "PredictionRecord",
    "RankingResult",
    "ThresholdCurve",
    "accuracy_vs_confidence",
    "auroc_auprc",
    "boxplot_stats",
    "confidence_histograms",
    "ece",
    "pca2",
    "read_predictions",
    "write_predictions",
]


@dataclass
class PredictionRecord:
    """One scored example; ``true_label`` is None for OOD points."""

    confidence: float
    predicted_label: int
    true_label: int | None

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")

    @property
    def is_ood(self) -> bool:
        return self.true_label is None

    @property
    def is_correct(self) -> bool:
        return self.true_label is not None and self.predicted_label == self.true_label


@dataclass
class CalibrationTable:
    """Per-bin occupancy, mean confidence, and accuracy (reliability data).

    Empty bins hold NaN for mean confidence and accuracy.
    """

    bin_edges: np.ndarray
    counts: np.ndarray
    mean_confidence: np.ndarray
    accuracy: np.ndarray

    @property
    def num_bins(self) -> int:
        return len(self.counts)


@dataclass
class ThresholdCurve:
    """Accuracy over records retained at each confidence threshold.

    ``accuracy`` is NaN where a threshold retains zero records.
    """

    thresholds: np.ndarray
    retained: np.ndarray
    accuracy: np.ndarray


@dataclass
class RankingResult:
    """AUROC/AUPRC with the underlying ROC and precision-recall curves."""

    auroc: float
    auprc: float
    roc_points: list[tuple[float, float]]
    pr_points: list[tuple[float, float]]


@dataclass
class ConfidenceHistograms:
    """Counts over shared confidence bins for three sets of points."""

    bin_edges: np.ndarray
    correct_id: np.ndarray
    incorrect_id: np.ndarray
    ood: np.ndarray


@dataclass
class BoxplotStats:
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float


@dataclass
class Pca2Result:
    """Top-2 principal projection of a point cloud plus optional extras."""

    points: np.ndarray
    extras: np.ndarray | None
    components: np.ndarray
    eigenvalues: np.ndarray


def _bin_indices(confidences: np.ndarray, num_bins: int) -> np.ndarray:
    # Equal-width bins on [0, 1]; a value on an interior edge goes to the
    # higher bin, and 1.0 lands in the top bin.
    edges = np.linspace(0.0, 1.0, num_bins + 1)
    idx = np.searchsorted(edges, confidences, side="right") - 1
    return np.clip(idx, 0, num_bins - 1)


def ece(records: list[PredictionRecord], num_bins: int = 15) -> tuple[float, CalibrationTable]:
    """Expected calibration error plus the per-bin reliability table.

    ECE is the occupancy-weighted mean absolute gap between per-bin accuracy
    and per-bin mean confidence; empty bins contribute nothing.  Only
    in-distribution records are accepted.
    """
    if num_bins < 1:
        raise ValueError("num_bins must be >= 1")
    if not records:
        raise ValueError("ece requires at least one record")
    if any(r.is_ood for r in records):
        raise ValueError("ece is an in-distribution metric; drop OOD records first")
    conf = np.array([r.confidence for r in records])
    correct = np.array([r.is_correct for r in records], dtype=np.float64)
    idx = _bin_indices(conf, num_bins)
    counts = np.bincount(idx, minlength=num_bins)
    conf_sums = np.bincount(idx, weights=conf, minlength=num_bins)
    correct_sums = np.bincount(idx, weights=correct, minlength=num_bins)
    with np.errstate(invalid="ignore"):
        mean_conf = np.where(counts > 0, conf_sums / counts, np.nan)
        acc = np.where(counts > 0, correct_sums / counts, np.nan)
    total = len(records)
    value = 0.0
    for b in range(num_bins):
        if counts[b] > 0:
            value += (counts[b] / total) * abs(acc[b] - mean_conf[b])
    table = CalibrationTable(bin_edges=np.linspace(0.0, 1.0, num_bins + 1),
                             counts=counts, mean_confidence=mean_conf, accuracy=acc)
    return value, table


def accuracy_vs_confidence(records: list[PredictionRecord],
                           thresholds) -> ThresholdCurve:
    """Accuracy over the records whose confidence is >= each threshold.

    OOD records count as incorrect whenever retained; a threshold that
    retains nothing gets NaN accuracy rather than zero.
    """
    taus = np.asarray(thresholds, dtype=np.float64)
    conf = np.array([r.confidence for r in records])
    correct = np.array([r.is_correct for r in records], dtype=np.float64)
    retained = np.empty(len(taus), dtype=np.int64)
    accuracy = np.empty(len(taus))
    for i, tau in enumerate(taus):
        mask = conf >= tau
        retained[i] = int(mask.sum())
        accuracy[i] = correct[mask].mean() if retained[i] else np.nan
    return ThresholdCurve(thresholds=taus, retained=retained, accuracy=accuracy)


def auroc_auprc(scores, is_positive) -> RankingResult:
    """Threshold-free ranking metrics for a binary score separation task.

    AUROC is integrated from the ROC curve with tied scores grouped at one
    threshold, which equals the Mann-Whitney statistic P(pos > neg) +
    0.5 P(tie).  AUPRC is the step-wise sum of precision times recall
    increments over the sorted unique thresholds.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(is_positive, dtype=bool)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("scores and is_positive must be equal-length vectors")
    num_pos = int(y.sum())
    num_neg = int((~y).sum())
    if num_pos == 0 or num_neg == 0:
        raise ValueError("need at least one positive and one negative")
    order = np.argsort(-s, kind="stable")
    s_sorted, y_sorted = s[order], y[order]
    # last index of each group of tied scores
    group_end = np.nonzero(np.append(s_sorted[1:] != s_sorted[:-1], True))[0]
    tp = np.cumsum(y_sorted)[group_end]
    fp = np.cumsum(~y_sorted)[group_end]
    tpr = tp / num_pos
    fpr = fp / num_neg
    roc_x = np.concatenate(([0.0], fpr))
    roc_y = np.concatenate(([0.0], tpr))
    auroc = float(((roc_x[1:] - roc_x[:-1]) * (roc_y[1:] + roc_y[:-1]) / 2.0).sum())
    precision = tp / (tp + fp)
    recall_prev = np.concatenate(([0.0], tpr[:-1]))
    auprc = float(((tpr - recall_prev) * precision).sum())
    return RankingResult(auroc=auroc, auprc=auprc,
                         roc_points=list(zip(roc_x.tolist(), roc_y.tolist())),
                         pr_points=list(zip(tpr.tolist(), precision.tolist())))


def confidence_histograms(correct_id, incorrect_id, ood,
                          num_bins: int = 15) -> ConfidenceHistograms:
    """Histogram three confidence collections over shared [0, 1] bins."""
    if num_bins < 1:
        raise ValueError("num_bins must be >= 1")

    def count(values):
        v = np.asarray(values, dtype=np.float64)
        if v.size == 0:
            return np.zeros(num_bins, dtype=np.int64)
        if (v < 0).any() or (v > 1).any():
            raise ValueError("confidences must lie in [0, 1]")
        return np.bincount(_bin_indices(v, num_bins), minlength=num_bins)

    return ConfidenceHistograms(bin_edges=np.linspace(0.0, 1.0, num_bins + 1),
                                correct_id=count(correct_id),
                                incorrect_id=count(incorrect_id), ood=count(ood))


def boxplot_stats(values) -> BoxplotStats:
    """Five-number summary with quartiles by inclusive linear interpolation."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("boxplot_stats requires at least one value")
    s = np.sort(v)
    n = s.size

    def quantile(q):
        h = q * (n - 1)
        lo = int(math.floor(h))
        t = h - lo
        if t == 0.0 or lo + 1 >= n:
            return float(s[lo])
        return float(s[lo] + t * (s[lo + 1] - s[lo]))

    return BoxplotStats(minimum=float(s[0]), q1=quantile(0.25), median=quantile(0.5),
                        q3=quantile(0.75), maximum=float(s[-1]))


_PCA_START_SEED = 0x9E3779B9
_PCA_MAX_ITER = 1_000_000


def pca2(points, extra_points=None, tol: float = 1e-10) -> Pca2Result:
    """Project points (and optional extras) onto the top-2 PCA subspace.

    Centering uses the points' mean; extra points share that centering.  The
    two components come from power iteration with deflation, run until the
    eigen-residual ||C v - lambda v|| drops below ``tol``; they are
    orthonormal, and each is sign-fixed so its largest-magnitude coordinate
    is positive.  Raises if the covariance has fewer than two nonzero
    eigenvalues.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 3 or pts.shape[1] < 2:
        raise ValueError("points must be [n x d] with n >= 3 and d >= 2")
    mean = pts.mean(axis=0)
    centered = pts - mean
    cov = centered.T @ centered / (pts.shape[0] - 1)
    scale = max(float(np.trace(cov)), 1.0)
    rng = np.random.default_rng(_PCA_START_SEED)

    deflated = cov.copy()
    components, eigenvalues = [], []
    for _ in range(2):
        v = rng.standard_normal(cov.shape[0])
        v /= np.linalg.norm(v)
        lam = 0.0
        for _ in range(_PCA_MAX_ITER):
            w = deflated @ v
            for c in components:
                w -= (c @ w) * c
            norm = np.linalg.norm(w)
            if norm <= scale * 1e-14:
                raise ValueError("covariance has fewer than 2 nonzero eigenvalues")
            v = w / norm
            lam = float(v @ (deflated @ v))
            if np.linalg.norm(deflated @ v - lam * v) < tol:
                break
        else:
            raise RuntimeError("power iteration did not converge")
        if lam <= scale * 1e-12:
            raise ValueError("covariance has fewer than 2 nonzero eigenvalues")
        top = int(np.argmax(np.abs(v)))
        if v[top] < 0:
            v = -v
        components.append(v)
        eigenvalues.append(lam)
        deflated = deflated - lam * np.outer(v, v)

    basis = np.stack(components, axis=1)
    projected = centered @ basis
    extras = None
    if extra_points is not None:
        extra = np.asarray(extra_points, dtype=np.float64)
        if extra.ndim != 2 or extra.shape[1] != pts.shape[1]:
            raise ValueError("extra_points must be [m x d] with matching d")
        extras = (extra - mean) @ basis
    return Pca2Result(points=projected, extras=extras, components=basis,
                      eigenvalues=np.array(eigenvalues))


def write_predictions(path, records: list[PredictionRecord]) -> None:
    """Dump records as CSV: confidence,predicted_label,true_label,is_ood."""
    rows = []
    for r in records:
        rows.append((fmt_float(r.confidence), str(r.predicted_label),
                     "" if r.is_ood else str(r.true_label), "1" if r.is_ood else "0"))
    write_csv(path, ["confidence", "predicted_label", "true_label", "is_ood"], rows)


def read_predictions(path) -> list[PredictionRecord]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != "confidence,predicted_label,true_label,is_ood":
        raise ValueError(f"{path} is not a prediction dump")
    records = []
    for line in lines[1:]:
        conf, pred, true, ood = line.split(",")
        records.append(PredictionRecord(
            confidence=float(conf), predicted_label=int(pred),
            true_label=None if ood == "1" else int(true)))
    return records
