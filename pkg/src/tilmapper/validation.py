"""Input validation helpers used by the estimators and pipeline functions."""

from __future__ import annotations

import numpy as np

from .errors import SingleClassError


def check_threshold(t: float) -> float:
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {t}")
    return t


def check_fraction(x: float, name: str = "fraction") -> float:
    x = float(x)
    if not 0.0 < x < 1.0:
        raise ValueError(f"{name} must be in (0, 1), got {x}")
    return x


def check_scores(scores) -> np.ndarray:
    """Coerce to a 1-D float array of probabilities in [0, 1]."""
    arr = np.asarray(scores, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"scores must be 1-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("scores must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError("scores contain non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("scores must lie in [0, 1]")
    return arr


def check_binary_labels(labels, n: int | None = None) -> np.ndarray:
    """Coerce to a 1-D int array with values in {0, 1}."""
    arr = np.asarray(labels)
    if arr.ndim != 1:
        raise ValueError(f"labels must be 1-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("labels must be non-empty")
    out = arr.astype(np.int64)
    if not np.array_equal(out, arr.astype(np.float64)):
        raise ValueError("labels must be integers")
    if not np.isin(out, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    if n is not None and out.size != n:
        raise ValueError(f"expected {n} labels, got {out.size}")
    return out


def check_both_classes(labels: np.ndarray) -> np.ndarray:
    if labels.min() == labels.max():
        raise SingleClassError(
            "both positive and negative examples are required"
        )
    return labels


def check_rgb_pixels(pixels, side_px: int | None = None) -> np.ndarray:
    """Validate an H x W x 3 uint8 RGB pixel block."""
    arr = np.asarray(pixels)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected HxWx3 RGB array, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        raise ValueError(f"expected uint8 pixels, got {arr.dtype}")
    if side_px is not None and arr.shape[:2] != (side_px, side_px):
        raise ValueError(
            f"expected {side_px}x{side_px} pixels, got {arr.shape[0]}x{arr.shape[1]}"
        )
    return arr


def check_prob_grid(probs) -> np.ndarray:
    """Validate a 2-D grid of probabilities in [0, 1] (float64)."""
    arr = np.asarray(probs, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"probability grid must be 2-D, got shape {arr.shape}")
    if arr.size and (not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("probability grid values must be finite and in [0, 1]")
    return arr
