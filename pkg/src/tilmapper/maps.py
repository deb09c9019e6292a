"""Per-slide probability maps: inference over a tile grid, file IO, grayscale import.

Map file format: one JSON header line, then ``n_rows`` lines of tab-separated
cell values in row-major order (decimal probabilities for probability maps,
0/1 for binary maps). Probabilities are written with shortest round-trip
decimal representation, so write/read is lossless and can never flip a
thresholding decision. Cells removed by the optional tissue filter store
probability 0.0 and are flagged in a companion mask carried in the header,
keeping the grid itself within [0, 1].
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import TYPE_CHECKING

import cv2
import numpy as np

from .errors import MapFormatError, SourceFormatError, UnreadableSourceError
from .tiling import PixelSource, SlideRef, TileGrid, TissueFilterParams, extract_patch, open_pixel_source, tissue_filter
from .validation import check_prob_grid

if TYPE_CHECKING:
    from .models.classifier import TilPatchClassifier


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class TilMap:
    """Grid of per-patch positive-class probabilities for one slide."""

    slide_id: str
    patch_px: int
    n_cols: int
    n_rows: int
    probs: np.ndarray
    model_id: str
    created_at: str = ""
    cancer_type: str | None = None
    patient_id: str | None = None
    pixel_source: str | None = None
    filtered: np.ndarray | None = None

    def __post_init__(self):
        self.probs = check_prob_grid(self.probs)
        if self.probs.shape != (self.n_rows, self.n_cols):
            raise MapFormatError(
                f"probability grid shape {self.probs.shape} does not match "
                f"declared geometry {self.n_rows}x{self.n_cols}"
            )
        if self.filtered is not None:
            self.filtered = np.asarray(self.filtered, dtype=bool)
            if self.filtered.shape != (self.n_rows, self.n_cols):
                raise MapFormatError("filtered mask shape does not match geometry")

    @property
    def map_id(self) -> str:
        return f"{self.slide_id}__{self.model_id}"

    @property
    def n_cells(self) -> int:
        return self.n_cols * self.n_rows


@dataclass
class BinaryTilMap:
    """Thresholded decisions over the same geometry as a source probability map."""

    slide_id: str
    patch_px: int
    n_cols: int
    n_rows: int
    cells: np.ndarray
    threshold: float
    source_map_id: str
    model_id: str = ""
    created_at: str = ""
    cancer_type: str | None = None
    patient_id: str | None = None

    def __post_init__(self):
        self.cells = np.asarray(self.cells)
        if self.cells.shape != (self.n_rows, self.n_cols):
            raise MapFormatError(
                f"cell grid shape {self.cells.shape} does not match "
                f"declared geometry {self.n_rows}x{self.n_cols}"
            )
        if self.cells.size and not np.isin(self.cells, (0, 1)).all():
            raise MapFormatError("binary map cells must be 0 or 1")
        self.cells = self.cells.astype(np.uint8)
        if not 0.0 <= self.threshold <= 1.0:
            raise MapFormatError(f"threshold must be in [0, 1], got {self.threshold}")

    @property
    def n_cells(self) -> int:
        return self.n_cols * self.n_rows


def _mask_to_cells(mask: np.ndarray | None) -> list[list[int]] | None:
    if mask is None or not mask.any():
        return None if mask is None else []
    ys, xs = np.nonzero(mask)
    return [[int(x), int(y)] for x, y in zip(xs, ys)]


def _cells_to_mask(cells, n_rows: int, n_cols: int) -> np.ndarray | None:
    if cells is None:
        return None
    mask = np.zeros((n_rows, n_cols), dtype=bool)
    for x, y in cells:
        if not (0 <= x < n_cols and 0 <= y < n_rows):
            raise MapFormatError(f"filtered cell ({x},{y}) outside geometry")
        mask[y, x] = True
    return mask


def write_map(m: TilMap | BinaryTilMap, path: str | Path) -> None:
    """Serialize a map: JSON header line + one tab-separated line per grid row."""
    path = Path(path)
    if isinstance(m, TilMap):
        header = {
            "kind": "til_map",
            "slide_id": m.slide_id,
            "patch_px": m.patch_px,
            "n_cols": m.n_cols,
            "n_rows": m.n_rows,
            "model_id": m.model_id,
            "created_at": m.created_at,
            "cancer_type": m.cancer_type,
            "patient_id": m.patient_id,
            "pixel_source": m.pixel_source,
            "filtered_cells": _mask_to_cells(m.filtered),
        }
        rows = ("\t".join(repr(float(v)) for v in row) for row in m.probs)
    else:
        header = {
            "kind": "binary_til_map",
            "slide_id": m.slide_id,
            "patch_px": m.patch_px,
            "n_cols": m.n_cols,
            "n_rows": m.n_rows,
            "model_id": m.model_id,
            "created_at": m.created_at,
            "cancer_type": m.cancer_type,
            "patient_id": m.patient_id,
            "threshold": float(m.threshold),
            "source_map_id": m.source_map_id,
        }
        rows = ("\t".join(str(int(v)) for v in row) for row in m.cells)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        for line in rows:
            fh.write(line + "\n")


def read_map(path: str | Path) -> TilMap | BinaryTilMap:
    """Parse a map file; raises :class:`MapFormatError` on any malformation."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        first = fh.readline()
        try:
            header = json.loads(first)
        except json.JSONDecodeError as exc:
            raise MapFormatError(f"{path}: malformed header line: {exc}") from exc
        if not isinstance(header, dict) or "kind" not in header:
            raise MapFormatError(f"{path}: header is not a map header object")
        body = [line.rstrip("\n") for line in fh if line.strip()]

    kind = header["kind"]
    try:
        n_cols = int(header["n_cols"])
        n_rows = int(header["n_rows"])
        slide_id = header["slide_id"]
        patch_px = int(header["patch_px"])
    except (KeyError, TypeError, ValueError) as exc:
        raise MapFormatError(f"{path}: header missing geometry fields: {exc}") from exc

    values: list[list[float]] = []
    for line in body:
        values.append([float(tok) for tok in line.split("\t") if tok != ""])
    n_payload = sum(len(row) for row in values)
    if n_payload != n_rows * n_cols or any(len(row) != n_cols for row in values):
        raise MapFormatError(
            f"{path}: payload has {n_payload} cells arranged in "
            f"{[len(r) for r in values][:5]}... but header declares {n_rows}x{n_cols}"
        )
    grid = np.array(values, dtype=np.float64).reshape(n_rows, n_cols)

    if kind == "til_map":
        if grid.size and (grid.min() < 0.0 or grid.max() > 1.0):
            raise MapFormatError(f"{path}: probability outside [0, 1]")
        return TilMap(
            slide_id=slide_id,
            patch_px=patch_px,
            n_cols=n_cols,
            n_rows=n_rows,
            probs=grid,
            model_id=header.get("model_id", ""),
            created_at=header.get("created_at", ""),
            cancer_type=header.get("cancer_type"),
            patient_id=header.get("patient_id"),
            pixel_source=header.get("pixel_source"),
            filtered=_cells_to_mask(header.get("filtered_cells"), n_rows, n_cols),
        )
    if kind == "binary_til_map":
        if "threshold" not in header or "source_map_id" not in header:
            raise MapFormatError(f"{path}: binary map header missing threshold/source_map_id")
        return BinaryTilMap(
            slide_id=slide_id,
            patch_px=patch_px,
            n_cols=n_cols,
            n_rows=n_rows,
            cells=grid,
            threshold=float(header["threshold"]),
            source_map_id=header["source_map_id"],
            model_id=header.get("model_id", ""),
            created_at=header.get("created_at", ""),
            cancer_type=header.get("cancer_type"),
            patient_id=header.get("patient_id"),
        )
    raise MapFormatError(f"{path}: unknown map kind {kind!r}")


def import_grayscale_map(
    image_path: str | Path,
    *,
    slide_id: str,
    patch_px: int = 100,
    model_id: str = "grayscale-import",
    channel: int | None = None,
    cancer_type: str | None = None,
    patient_id: str | None = None,
    created_at: str = "",
) -> TilMap:
    """Ingest an 8-bit grayscale image as a probability map (pixel value v -> v/255).

    Multi-channel images require an explicit ``channel`` selection; 8-bit depth
    is assumed (the linear v/255 encoding is an import assumption, documented).
    """
    image_path = Path(image_path)
    if not image_path.exists():
        raise UnreadableSourceError(f"map image not found: {image_path}")
    raw = cv2.imread(str(image_path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise UnreadableSourceError(f"could not decode image: {image_path}")
    if raw.ndim == 3:
        if channel is None:
            raise SourceFormatError(
                f"{image_path} has {raw.shape[2]} channels; pass channel= to select one"
            )
        if not 0 <= channel < raw.shape[2]:
            raise SourceFormatError(f"channel {channel} out of range for {image_path}")
        raw = raw[:, :, channel]
    if raw.dtype != np.uint8:
        raise SourceFormatError(
            f"{image_path}: expected 8-bit pixels, got {raw.dtype}"
        )
    probs = raw.astype(np.float64) / 255.0
    return TilMap(
        slide_id=slide_id,
        patch_px=patch_px,
        n_cols=probs.shape[1],
        n_rows=probs.shape[0],
        probs=probs,
        model_id=model_id,
        created_at=created_at,
        cancer_type=cancer_type,
        patient_id=patient_id,
    )


def infer_map(
    source: PixelSource | SlideRef,
    model: "TilPatchClassifier",
    grid: TileGrid,
    *,
    tissue_params: TissueFilterParams | None = None,
    batch_size: int | None = None,
    model_id: str | None = None,
    created_at: str | None = None,
    cancer_type: str | None = None,
    patient_id: str | None = None,
    pixel_source_path: str | None = None,
) -> TilMap:
    """Score every grid cell with a trained model and assemble the probability map.

    When ``tissue_params`` is given, background cells are skipped: they store
    probability 0.0 and are flagged in the map's companion mask. Deterministic
    for fixed model, slide, and batching.
    """
    if isinstance(source, SlideRef):
        pixel_source_path = pixel_source_path or source.pixel_source
        cancer_type = cancer_type or source.cancer_type.value
        patient_id = patient_id or source.patient_id
        source = open_pixel_source(source.pixel_source)

    kept_pixels: list[np.ndarray] = []
    kept_cells: list[tuple[int, int]] = []
    mask = np.zeros((grid.n_rows, grid.n_cols), dtype=bool)
    for gx, gy in grid:
        patch = extract_patch(source, grid, gx, gy)
        if tissue_params is not None and not tissue_filter(patch, tissue_params):
            mask[gy, gx] = True
            continue
        kept_pixels.append(patch.pixels)
        kept_cells.append((gx, gy))

    probs = np.zeros((grid.n_rows, grid.n_cols), dtype=np.float64)
    if kept_pixels:
        scores = model.score_patches(kept_pixels, batch_size=batch_size)
        for (gx, gy), s in zip(kept_cells, scores):
            probs[gy, gx] = float(s)

    if model_id is None:
        model_id = getattr(model, "model_id_", None) or "model"
    return TilMap(
        slide_id=grid.slide_id,
        patch_px=grid.patch_px,
        n_cols=grid.n_cols,
        n_rows=grid.n_rows,
        probs=probs,
        model_id=model_id,
        created_at=utc_now_iso() if created_at is None else created_at,
        cancer_type=cancer_type,
        patient_id=patient_id,
        pixel_source=pixel_source_path,
        filtered=mask if tissue_params is not None else None,
    )
