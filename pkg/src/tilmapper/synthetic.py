"""Synthetic two-class imagery for desk-scale runs.

Positive patches scatter small dark round blobs (lymphocyte-like) over a pink
stained background; negative patches are the bare background. The classes are
separable by construction, which makes the generator an oracle for training
and evaluation tests: any reasonable classifier must reach near-perfect
discrimination on held-out samples.
"""

from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np

from .manifests import AnnotationManifest, Label, PatchRecord, Source, Split
from .tiling import CancerType

BACKGROUND_RGB = (225, 180, 205)  # eosin-like pink
BLOB_RGB = (70, 45, 110)  # hematoxylin-like dark purple


def make_patch(
    rng: np.random.Generator,
    positive: bool,
    patch_px: int = 100,
    n_blobs: tuple[int, int] = (12, 24),
) -> np.ndarray:
    """One synthetic patch; positive patches carry dark blobs, negatives do not."""
    noise = rng.integers(-12, 13, size=(patch_px, patch_px, 3))
    pixels = np.clip(np.array(BACKGROUND_RGB) + noise, 0, 255).astype(np.uint8)
    if positive:
        count = int(rng.integers(n_blobs[0], n_blobs[1] + 1))
        for _ in range(count):
            cx, cy = rng.integers(3, patch_px - 3, size=2)
            radius = int(rng.integers(2, max(3, patch_px // 16)))
            color = np.clip(
                np.array(BLOB_RGB) + rng.integers(-15, 16, size=3), 0, 255
            )
            cv2.circle(pixels, (int(cx), int(cy)), radius,
                       tuple(int(c) for c in color), thickness=-1)
    return pixels


def make_patch_set(
    n_pos: int, n_neg: int, rng: np.random.Generator, patch_px: int = 100
) -> tuple[list[np.ndarray], np.ndarray]:
    """Labeled patches, positives first."""
    pixels = [make_patch(rng, True, patch_px) for _ in range(n_pos)]
    pixels += [make_patch(rng, False, patch_px) for _ in range(n_neg)]
    labels = np.array([1] * n_pos + [0] * n_neg, dtype=np.int64)
    return pixels, labels


def make_slide_pixels(
    n_cols: int,
    n_rows: int,
    positive_cells: np.ndarray,
    rng: np.random.Generator,
    patch_px: int = 100,
    n_blobs: tuple[int, int] = (12, 24),
) -> np.ndarray:
    """Assemble a slide image from per-cell textures.

    ``positive_cells`` is an (n_rows, n_cols) boolean grid of ground truth.
    A wide ``n_blobs`` range (e.g. ``(3, 24)``) produces weakly positive cells
    alongside dense ones, which spreads classifier scores across (0, 1).
    """
    positive_cells = np.asarray(positive_cells, dtype=bool)
    if positive_cells.shape != (n_rows, n_cols):
        raise ValueError(
            f"positive_cells shape {positive_cells.shape} != ({n_rows},{n_cols})"
        )
    slide = np.empty((n_rows * patch_px, n_cols * patch_px, 3), dtype=np.uint8)
    for gy in range(n_rows):
        for gx in range(n_cols):
            slide[
                gy * patch_px : (gy + 1) * patch_px,
                gx * patch_px : (gx + 1) * patch_px,
            ] = make_patch(rng, bool(positive_cells[gy, gx]), patch_px, n_blobs=n_blobs)
    return slide


def make_region_pixels(
    positive_cells: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """An 800x800 region image from an 8x8 ground-truth grid."""
    return make_slide_pixels(8, 8, positive_cells, rng, patch_px=100)


def write_patch_png(pixels: np.ndarray, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), cv2.cvtColor(pixels, cv2.COLOR_RGB2BGR)):
        raise IOError(f"failed to write {path}")


def make_manifest_dir(
    out_dir: str | Path,
    n_pos: int,
    n_neg: int,
    rng: np.random.Generator,
    *,
    name: str = "synthetic",
    patch_px: int = 100,
    cancer_type: CancerType = CancerType.LUAD,
    n_patients: int = 4,
    split: Split = Split.TRAIN,
) -> AnnotationManifest:
    """Write synthetic patches as PNGs and return the matching manifest.

    Patches are laid out on a fictitious grid (one synthetic slide per
    patient) so records satisfy the manifest invariants.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pixels, labels = make_patch_set(n_pos, n_neg, rng, patch_px)
    order = rng.permutation(len(pixels))
    records = []
    for i, idx in enumerate(order):
        patient = f"{name}-patient-{i % n_patients}"
        slide_id = f"{name}-slide-{i % n_patients}"
        gx, gy = i // n_patients, 0
        uri = out_dir / f"{slide_id}_{gx}_{gy}.png"
        write_patch_png(pixels[idx], uri)
        records.append(
            PatchRecord(
                slide_id=slide_id,
                patient_id=patient,
                cancer_type=cancer_type,
                grid_x=gx,
                grid_y=gy,
                label=Label.TIL_POSITIVE if labels[idx] else Label.TIL_NEGATIVE,
                source=Source.MANUAL,
                patch_uri=str(uri),
            )
        )
    manifest = AnnotationManifest(name=name, records=records, split=split)
    manifest.save(out_dir / f"{name}.jsonl")
    return manifest
