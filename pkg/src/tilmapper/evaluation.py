"""Patch-level metrics (F1, accuracy, AUC; overall and per cancer type) and
region-level low/medium/high aggregation.

F1 is computed for the positive class (the binary-task framing); a macro
variant is available behind a flag. When no positive exists in either
predictions or truths, F1 is reported as an explicit None marker, never 0.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .calibration import ScoredSet, apply_threshold, auc_score
from .errors import MissingThresholdError, RegionSizeError, SingleClassError
from .manifests import AnnotationManifest
from .models.classifier import PatchLoader, TilPatchClassifier, load_manifest_patches
from .validation import check_binary_labels, check_threshold

REGION_PX = 800
REGION_GRID = 8  # 8x8 = 64 sub-patches of 100px


@dataclass(frozen=True)
class PatchMetrics:
    tp: int
    fp: int
    fn: int
    tn: int
    accuracy: float
    precision: float | None
    recall: float | None
    f1: float | None

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def patch_metrics(predictions, truths) -> PatchMetrics:
    """Confusion-matrix metrics for binary predictions against truths."""
    pred = check_binary_labels(predictions)
    true = check_binary_labels(truths, n=pred.size)
    tp = int(np.sum((pred == 1) & (true == 1)))
    fp = int(np.sum((pred == 1) & (true == 0)))
    fn = int(np.sum((pred == 0) & (true == 1)))
    tn = int(np.sum((pred == 0) & (true == 0)))
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    f1 = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else None
    return PatchMetrics(
        tp=tp, fp=fp, fn=fn, tn=tn,
        accuracy=(tp + tn) / pred.size,
        precision=precision, recall=recall, f1=f1,
    )


def macro_f1(predictions, truths) -> float | None:
    """Unweighted mean of positive-class and negative-class F1."""
    m_pos = patch_metrics(predictions, truths)
    m_neg = patch_metrics(1 - check_binary_labels(predictions),
                          1 - check_binary_labels(truths))
    if m_pos.f1 is None or m_neg.f1 is None:
        return None
    return (m_pos.f1 + m_neg.f1) / 2.0


@dataclass
class EvalReport:
    """Per-model metrics overall and per cancer type over one test manifest."""

    per_model: dict
    per_cancer_type: dict
    n_test: int
    per_type_counts: dict

    def to_dict(self) -> dict:
        return {
            "n_test": self.n_test,
            "per_type_counts": self.per_type_counts,
            "per_model": self.per_model,
            "per_cancer_type": self.per_cancer_type,
        }

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def _metric_row(scores: np.ndarray, truths: np.ndarray, threshold: float) -> dict:
    pred = apply_threshold(scores, threshold)
    m = patch_metrics(pred, truths)
    try:
        auc = auc_score(ScoredSet(scores=scores, labels=truths))
    except SingleClassError:
        auc = None
    return {"f1": m.f1, "accuracy": m.accuracy, "auc": auc, "threshold": threshold}


def evaluate_models(
    models: Mapping[str, TilPatchClassifier],
    test_manifest: AnnotationManifest,
    thresholds: Mapping[str, float],
    patch_loader: PatchLoader | None = None,
) -> EvalReport:
    """Score each model on the test manifest and report F1/accuracy/AUC,
    overall and broken down by cancer type."""
    missing = [name for name in models if name not in thresholds]
    if missing:
        raise MissingThresholdError(
            f"no calibrated threshold for model(s): {sorted(missing)}"
        )
    if not len(test_manifest):
        raise ValueError("test manifest is empty")
    pixels, truths = load_manifest_patches(test_manifest, patch_loader)
    types = np.array([r.cancer_type.value for r in test_manifest.records])

    per_model: dict = {}
    per_type: dict = {t: {} for t in sorted(set(types))}
    for name, model in models.items():
        t = check_threshold(thresholds[name])
        scores = model.score_patches(pixels)
        per_model[name] = _metric_row(scores, truths, t)
        for ct in per_type:
            sel = types == ct
            per_type[ct][name] = _metric_row(scores[sel], truths[sel], t)
    counts = {t: int(np.sum(types == t)) for t in per_type}
    return EvalReport(
        per_model=per_model,
        per_cancer_type=per_type,
        n_test=len(test_manifest),
        per_type_counts=counts,
    )


# -- region-level aggregation ------------------------------------------------


class TilDensity(IntEnum):
    LOW = 0
    MEDIUM = 1
    HIGH = 2

    @classmethod
    def coerce(cls, value) -> "TilDensity":
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                raise ValueError(f"unknown density label {value!r}") from None
        return cls(int(value))


def final_label_from_ratings(ratings: Sequence[TilDensity | str | int]) -> TilDensity:
    """Rounded average of ordinal expert ratings (LOW=0, MEDIUM=1, HIGH=2),
    rounding half up."""
    vals = [int(TilDensity.coerce(r)) for r in ratings]
    if not vals:
        raise ValueError("at least one rating is required")
    return TilDensity(int(math.floor(sum(vals) / len(vals) + 0.5)))


@dataclass
class RegionRecord:
    """One 800x800 region with expert ratings and a model's positive-patch count."""

    region_id: str
    expert_labels: list
    predicted_count: int
    final_label: TilDensity | None = None

    def __post_init__(self):
        self.expert_labels = [TilDensity.coerce(r) for r in self.expert_labels]
        if self.final_label is None:
            self.final_label = final_label_from_ratings(self.expert_labels)
        else:
            self.final_label = TilDensity.coerce(self.final_label)
        if not 0 <= self.predicted_count <= REGION_GRID * REGION_GRID:
            raise ValueError(
                f"predicted_count must be in [0, {REGION_GRID * REGION_GRID}], "
                f"got {self.predicted_count}"
            )


def region_cells(region_pixels: np.ndarray) -> list[np.ndarray]:
    """Split an 800x800 region into its 64 100px sub-patches, row-major."""
    arr = np.asarray(region_pixels)
    if arr.shape[:2] != (REGION_PX, REGION_PX) or arr.ndim != 3 or arr.shape[2] != 3:
        raise RegionSizeError(
            f"region must be {REGION_PX}x{REGION_PX}x3, got {arr.shape}"
        )
    side = REGION_PX // REGION_GRID
    return [
        arr[gy * side : (gy + 1) * side, gx * side : (gx + 1) * side]
        for gy in range(REGION_GRID)
        for gx in range(REGION_GRID)
    ]


def region_count(
    model: TilPatchClassifier, region_pixels: np.ndarray, threshold: float
) -> int:
    """Number of sub-patches classified positive in an 800x800 region (0..64)."""
    threshold = check_threshold(threshold)
    cells = region_cells(region_pixels)
    scores = model.score_patches(cells)
    return int(np.sum(scores >= threshold))


@dataclass(frozen=True)
class DistributionSummary:
    counts: tuple
    minimum: float | None
    q1: float | None
    median: float | None
    q3: float | None
    maximum: float | None

    def to_dict(self) -> dict:
        return {
            "counts": list(self.counts),
            "min": self.minimum,
            "q1": self.q1,
            "median": self.median,
            "q3": self.q3,
            "max": self.maximum,
        }


def _summary(counts: list[int]) -> DistributionSummary:
    if not counts:
        return DistributionSummary((), None, None, None, None, None)
    arr = np.array(sorted(counts), dtype=np.float64)
    q = np.percentile(arr, [0, 25, 50, 75, 100])
    return DistributionSummary(
        counts=tuple(int(c) for c in arr),
        minimum=float(q[0]), q1=float(q[1]), median=float(q[2]),
        q3=float(q[3]), maximum=float(q[4]),
    )


def region_distribution(records: Sequence[RegionRecord]) -> dict[str, DistributionSummary]:
    """Per-density-class distribution of predicted counts (for violin-style plots)."""
    buckets: dict[TilDensity, list[int]] = {d: [] for d in TilDensity}
    for r in records:
        buckets[r.final_label].append(r.predicted_count)
    return {d.name: _summary(buckets[d]) for d in TilDensity}


def write_distribution_files(
    dist: Mapping[str, DistributionSummary],
    csv_path: str | Path,
    json_path: str | Path | None = None,
) -> None:
    """Emit plot data: CSV of per-class counts plus a quantile-summary JSON."""
    csv_path = Path(csv_path)
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["density_class", "predicted_count"])
        for cls_name, summary in dist.items():
            for c in summary.counts:
                writer.writerow([cls_name, c])
    if json_path is not None:
        Path(json_path).write_text(
            json.dumps({k: v.to_dict() for k, v in dist.items()}, indent=2) + "\n"
        )
