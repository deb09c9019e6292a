"""Non-overlapping tiling of whole-slide (or stand-in) images into fixed-size patches.

Slides are accessed through the narrow :class:`PixelSource` interface (read an
RGB rectangle) so that real slide readers and in-memory synthetic images are
interchangeable. Inputs are assumed to already be at 20X-equivalent resolution
(100 px = 50 um); rescaling from other magnifications is a pre-processing
responsibility recorded in :class:`SlideRef` metadata, not performed here.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterator, Protocol, runtime_checkable

import cv2
import numpy as np

from .errors import EmptyGridError, OutOfBoundsError, SourceFormatError, UnreadableSourceError
from .validation import check_rgb_pixels

DEFAULT_PATCH_PX = 100


class CancerType(str, Enum):
    """The twelve cancer-type cohorts this pipeline covers."""

    BLCA = "BLCA"
    BRCA = "BRCA"
    CESC = "CESC"
    COAD = "COAD"
    LUAD = "LUAD"
    LUSC = "LUSC"
    PAAD = "PAAD"
    PRAD = "PRAD"
    READ = "READ"
    SKCM = "SKCM"
    STAD = "STAD"
    UCEC = "UCEC"

    @classmethod
    def coerce(cls, value: "CancerType | str") -> "CancerType":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(
                f"unknown cancer type {value!r}; expected one of "
                f"{sorted(m.value for m in cls)}"
            ) from None


@runtime_checkable
class PixelSource(Protocol):
    """Read-only access to RGB pixel data; safe for concurrent readers."""

    @property
    def width_px(self) -> int: ...

    @property
    def height_px(self) -> int: ...

    def read_region(self, x: int, y: int, w: int, h: int) -> np.ndarray:
        """Return the (h, w, 3) uint8 RGB block with top-left corner (x, y)."""
        ...


class ArraySource:
    """In-memory pixel source backed by an H x W x 3 uint8 array."""

    def __init__(self, pixels: np.ndarray):
        if not isinstance(pixels, np.ndarray) or pixels.ndim != 3 or pixels.shape[2] != 3:
            raise SourceFormatError(
                f"expected HxWx3 RGB array, got shape {getattr(pixels, 'shape', None)}"
            )
        if pixels.dtype != np.uint8:
            raise SourceFormatError(f"expected uint8 pixels, got {pixels.dtype}")
        self._pixels = pixels

    @property
    def width_px(self) -> int:
        return self._pixels.shape[1]

    @property
    def height_px(self) -> int:
        return self._pixels.shape[0]

    def read_region(self, x: int, y: int, w: int, h: int) -> np.ndarray:
        if x < 0 or y < 0 or x + w > self.width_px or y + h > self.height_px:
            raise OutOfBoundsError(
                f"region ({x},{y},{w},{h}) exceeds source {self.width_px}x{self.height_px}"
            )
        return self._pixels[y : y + h, x : x + w].copy()


def open_pixel_source(path: str | Path) -> ArraySource:
    """Open an image file as a pixel source (desk-scale; whole image in memory)."""
    path = Path(path)
    if not path.exists():
        raise UnreadableSourceError(f"pixel source not found: {path}")
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise UnreadableSourceError(f"could not decode image: {path}")
    if raw.ndim != 3 or raw.shape[2] != 3:
        raise SourceFormatError(
            f"{path} is not a 3-channel RGB image (shape {raw.shape})"
        )
    return ArraySource(cv2.cvtColor(raw, cv2.COLOR_BGR2RGB))


@dataclass(frozen=True)
class SlideRef:
    """Identity and geometry of one slide admitted to tiling."""

    slide_id: str
    patient_id: str
    cancer_type: CancerType
    width_px: int
    height_px: int
    magnification: float = 20.0
    microns_per_pixel: float = 0.5
    pixel_source: str = ""

    def __post_init__(self):
        object.__setattr__(self, "cancer_type", CancerType.coerce(self.cancer_type))
        if self.width_px <= 0 or self.height_px <= 0:
            raise ValueError(
                f"slide dimensions must be positive, got {self.width_px}x{self.height_px}"
            )
        if self.magnification <= 0 or self.microns_per_pixel <= 0:
            raise ValueError("magnification and microns_per_pixel must be positive")


@dataclass(frozen=True)
class TileGrid:
    """Axis-aligned, non-overlapping, edge-adjacent grid of square tiles."""

    slide_id: str
    patch_px: int
    n_cols: int
    n_rows: int
    origin_offset_px: tuple[int, int] = (0, 0)

    @property
    def n_cells(self) -> int:
        return self.n_cols * self.n_rows

    def cell_origin(self, grid_x: int, grid_y: int) -> tuple[int, int]:
        """Top-left pixel coordinate of a cell."""
        ox, oy = self.origin_offset_px
        return ox + grid_x * self.patch_px, oy + grid_y * self.patch_px

    def __iter__(self) -> Iterator[tuple[int, int]]:
        """Yield (grid_x, grid_y) in row-major order."""
        for gy in range(self.n_rows):
            for gx in range(self.n_cols):
                yield gx, gy


@dataclass(frozen=True)
class PatchImage:
    """One extracted square patch with its grid position."""

    grid_x: int
    grid_y: int
    pixels: np.ndarray
    patch_px: int

    def __post_init__(self):
        check_rgb_pixels(self.pixels, side_px=self.patch_px)


def build_grid(
    slide: SlideRef,
    patch_px: int = DEFAULT_PATCH_PX,
    origin_offset_px: tuple[int, int] = (0, 0),
) -> TileGrid:
    """Compute the tile grid for a slide.

    Trailing partial rows/columns are discarded (floor division), never padded,
    so every tile covers exactly patch_px x patch_px real pixels.
    """
    if patch_px <= 0:
        raise ValueError(f"patch_px must be >= 1, got {patch_px}")
    ox, oy = origin_offset_px
    if ox < 0 or oy < 0:
        raise ValueError(f"origin offset must be non-negative, got {origin_offset_px}")
    n_cols = (slide.width_px - ox) // patch_px
    n_rows = (slide.height_px - oy) // patch_px
    if n_cols <= 0 or n_rows <= 0:
        raise EmptyGridError(
            f"slide {slide.slide_id} ({slide.width_px}x{slide.height_px}, "
            f"offset {origin_offset_px}) is smaller than one {patch_px}px patch"
        )
    return TileGrid(
        slide_id=slide.slide_id,
        patch_px=patch_px,
        n_cols=n_cols,
        n_rows=n_rows,
        origin_offset_px=(ox, oy),
    )


def extract_patch(
    source: PixelSource | SlideRef,
    grid: TileGrid,
    grid_x: int,
    grid_y: int,
) -> PatchImage:
    """Extract the exact pixel block of one grid cell.

    Deterministic for fixed inputs. Accepts either an open :class:`PixelSource`
    or a :class:`SlideRef` whose ``pixel_source`` path is opened per call
    (callers iterating a grid should open the source once).
    """
    if isinstance(source, SlideRef):
        source = open_pixel_source(source.pixel_source)
    if not (0 <= grid_x < grid.n_cols and 0 <= grid_y < grid.n_rows):
        raise OutOfBoundsError(
            f"cell ({grid_x},{grid_y}) outside grid {grid.n_cols}x{grid.n_rows}"
        )
    x, y = grid.cell_origin(grid_x, grid_y)
    pixels = source.read_region(x, y, grid.patch_px, grid.patch_px)
    return PatchImage(grid_x=grid_x, grid_y=grid_y, pixels=pixels, patch_px=grid.patch_px)


@dataclass(frozen=True)
class TissueFilterParams:
    """Background rule: a pixel is background when min(R,G,B) >= background_intensity;
    a patch passes when the non-background fraction is >= min_tissue_fraction."""

    background_intensity: int = 220
    min_tissue_fraction: float = 0.25


def tissue_filter(
    patch: PatchImage | np.ndarray,
    params: TissueFilterParams | None = None,
) -> bool:
    """True iff the patch holds enough non-background (tissue) pixels."""
    params = params or TissueFilterParams()
    pixels = patch.pixels if isinstance(patch, PatchImage) else check_rgb_pixels(patch)
    background = pixels.min(axis=2) >= params.background_intensity
    tissue_fraction = 1.0 - background.mean()
    return bool(tissue_fraction >= params.min_tissue_fraction)
