"""ROC construction, AUC, and fixed-threshold selection on a validation set.

Threshold selection follows the operational rule this pipeline standardizes on:
pick the candidate minimizing |FPR - FNR| (the equal-error-rate point). The
textbook Youden's J maximizer (TPR - FPR) is available via ``method="youden-j"``
for comparison. The decision rule is ``score >= threshold`` everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .maps import BinaryTilMap, TilMap
from .validation import check_binary_labels, check_both_classes, check_scores, check_threshold

METHODS = ("eer", "youden-j")


@dataclass(frozen=True)
class ScoredSet:
    """Paired classifier scores and ground-truth binary labels."""

    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        scores = check_scores(self.scores)
        labels = check_binary_labels(self.labels, n=scores.size)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.scores.size


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    fpr: float
    fnr: float
    tpr: float


@dataclass(frozen=True)
class RocCurve:
    points: tuple[RocPoint, ...]
    auc: float

    def thresholds(self) -> np.ndarray:
        return np.array([p.threshold for p in self.points])


@dataclass(frozen=True)
class CalibrationResult:
    chosen_threshold: float
    criterion_value: float
    roc: RocCurve
    validation_manifest_name: str = ""
    method: str = "eer"


def _candidate_thresholds(scores: np.ndarray) -> np.ndarray:
    """Unique observed scores plus 0.0 and 1.0 sentinels, strictly increasing."""
    return np.unique(np.concatenate([scores, [0.0, 1.0]]))


def auc_score(s: ScoredSet) -> float:
    """Probability a random positive outscores a random negative, ties counted 0.5.

    Computed as the Mann-Whitney rank statistic (average ranks handle ties).
    """
    check_both_classes(s.labels)
    pos = s.labels == 1
    n_pos = int(pos.sum())
    n_neg = s.labels.size - n_pos
    ranks = rankdata(s.scores)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def _roc_counts(s: ScoredSet) -> tuple[np.ndarray, np.ndarray, np.ndarray, int, int]:
    """Candidate thresholds with integer TP/FP counts (prediction = score >= t)."""
    check_both_classes(s.labels)
    candidates = _candidate_thresholds(s.scores)
    pos_scores = np.sort(s.scores[s.labels == 1])
    neg_scores = np.sort(s.scores[s.labels == 0])
    n_pos, n_neg = pos_scores.size, neg_scores.size
    tp = n_pos - np.searchsorted(pos_scores, candidates, side="left")
    fp = n_neg - np.searchsorted(neg_scores, candidates, side="left")
    return candidates, tp, fp, n_pos, n_neg


def roc_curve(s: ScoredSet) -> RocCurve:
    """Evaluate FPR/FNR/TPR at every candidate threshold (prediction = score >= t)."""
    candidates, tp, fp, n_pos, n_neg = _roc_counts(s)
    fpr = fp / n_neg
    tpr = tp / n_pos
    fnr = (n_pos - tp) / n_pos
    points = tuple(
        RocPoint(threshold=float(t), fpr=float(a), fnr=float(b), tpr=float(c))
        for t, a, b, c in zip(candidates, fpr, fnr, tpr)
    )
    return RocCurve(points=points, auc=auc_score(s))


def youden_threshold(
    s: ScoredSet,
    method: str = "eer",
    validation_manifest_name: str = "",
) -> CalibrationResult:
    """Select the fixed decision threshold on a validation set.

    ``method="eer"``: argmin |FPR - FNR| over the candidate thresholds.
    ``method="youden-j"``: argmax (TPR - FPR). Ties break toward the smallest
    threshold in both cases. ``criterion_value`` always records |FPR - FNR| at
    the chosen point.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    roc = roc_curve(s)
    # integer-exact criteria so rational ties are compared exactly:
    # |FPR - FNR| ~ |fp*n_pos - fn*n_neg|,  TPR - FPR ~ tp*n_neg - fp*n_pos
    _, tp, fp, n_pos, n_neg = _roc_counts(s)
    fn = n_pos - tp
    if method == "eer":
        idx = int(np.argmin(np.abs(fp * n_pos - fn * n_neg)))  # first = smallest t
    else:
        idx = int(np.argmax(tp * n_neg - fp * n_pos))
    chosen = roc.points[idx]
    return CalibrationResult(
        chosen_threshold=chosen.threshold,
        criterion_value=abs(chosen.fpr - chosen.fnr),
        roc=roc,
        validation_manifest_name=validation_manifest_name,
        method=method,
    )


def apply_threshold(obj: ScoredSet | TilMap | np.ndarray | list, t: float):
    """Binarize scores (positive iff score >= t); shape-preserving for maps.

    Returns a uint8 label array for score inputs, or a :class:`BinaryTilMap`
    for a :class:`TilMap` input.
    """
    t = check_threshold(t)
    if isinstance(obj, TilMap):
        return BinaryTilMap(
            slide_id=obj.slide_id,
            patch_px=obj.patch_px,
            n_cols=obj.n_cols,
            n_rows=obj.n_rows,
            cells=(obj.probs >= t).astype(np.uint8),
            threshold=t,
            source_map_id=obj.map_id,
            model_id=obj.model_id,
            created_at=obj.created_at,
            cancer_type=obj.cancer_type,
            patient_id=obj.patient_id,
        )
    if isinstance(obj, ScoredSet):
        scores = obj.scores
    else:
        scores = np.asarray(obj, dtype=np.float64)
    return (scores >= t).astype(np.uint8)


class ThresholdCalibrator(BaseEstimator):
    """Estimator-style wrapper: fit a fixed decision threshold on scored labels.

    Parameters
    ----------
    method : {"eer", "youden-j"}
        Selection criterion, see :func:`youden_threshold`.
    """

    def __init__(self, method: str = "eer"):
        self.method = method

    def fit(self, scores, labels):
        s = ScoredSet(scores=np.asarray(scores), labels=np.asarray(labels))
        self.result_ = youden_threshold(s, method=self.method)
        self.roc_ = self.result_.roc
        self.threshold_ = self.result_.chosen_threshold
        self.auc_ = self.roc_.auc
        return self

    def predict(self, scores) -> np.ndarray:
        if not hasattr(self, "threshold_"):
            raise NotFittedError("ThresholdCalibrator must be fitted before predict")
        return apply_threshold(np.asarray(scores, dtype=np.float64), self.threshold_)
