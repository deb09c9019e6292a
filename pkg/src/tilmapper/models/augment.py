"""Patch resizing and the three stochastic training augmentations.

All geometric transforms keep a patch's label untouched: rotations/flips are
exact bijections of the pixel grid, and the window shift fills the exposed
margin by reflection. Color jitter operates in HSL space with bounded
magnitudes. A config with all magnitudes zero and rotate_flip=False is the
identity transform, bit for bit.
"""

from __future__ import annotations

import cv2
import numpy as np

from ..tiling import PatchImage
from ..validation import check_rgb_pixels
from .config import AugmentationConfig


def resize_pixels(pixels: np.ndarray, target_px: int) -> np.ndarray:
    """Bilinear resize of an RGB pixel block to target_px x target_px."""
    if target_px <= 0:
        raise ValueError(f"target_px must be >= 1, got {target_px}")
    pixels = check_rgb_pixels(pixels)
    if pixels.shape[0] == target_px and pixels.shape[1] == target_px:
        return pixels.copy()
    return cv2.resize(pixels, (target_px, target_px), interpolation=cv2.INTER_LINEAR)


def resize_patch(patch: PatchImage, target_px: int) -> PatchImage:
    return PatchImage(
        grid_x=patch.grid_x,
        grid_y=patch.grid_y,
        pixels=resize_pixels(patch.pixels, target_px),
        patch_px=target_px,
    )


def shift_window(pixels: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """Move the sampling window by (dx, dy); content moves the opposite way.

    The margin exposed by the shift is filled by reflection padding.
    """
    if dx == 0 and dy == 0:
        return pixels.copy()
    pad = max(abs(dx), abs(dy))
    padded = np.pad(pixels, ((pad, pad), (pad, pad), (0, 0)), mode="reflect")
    h, w = pixels.shape[:2]
    y0, x0 = pad + dy, pad + dx
    return padded[y0 : y0 + h, x0 : x0 + w].copy()


def dihedral(pixels: np.ndarray, quarter_turns: int, mirror: bool) -> np.ndarray:
    """One of the 8 exact 90-degree rotation / mirror variants."""
    out = np.rot90(pixels, k=quarter_turns % 4)
    if mirror:
        out = np.fliplr(out)
    return np.ascontiguousarray(out)


def hsl_jitter(
    pixels: np.ndarray,
    hue_shift_deg: float,
    sat_scale: float,
    light_scale: float,
) -> np.ndarray:
    """Shift hue (degrees) and scale saturation/lightness, clipped to valid range."""
    rgb = pixels.astype(np.float32) / 255.0
    hls = cv2.cvtColor(rgb, cv2.COLOR_RGB2HLS)  # H in [0,360), L and S in [0,1]
    hls[:, :, 0] = np.mod(hls[:, :, 0] + hue_shift_deg, 360.0)
    hls[:, :, 1] = np.clip(hls[:, :, 1] * light_scale, 0.0, 1.0)
    hls[:, :, 2] = np.clip(hls[:, :, 2] * sat_scale, 0.0, 1.0)
    out = cv2.cvtColor(hls, cv2.COLOR_HLS2RGB)
    return np.clip(np.rint(out * 255.0), 0, 255).astype(np.uint8)


def augment(
    patch: PatchImage | np.ndarray,
    cfg: AugmentationConfig,
    rng: np.random.Generator,
) -> PatchImage | np.ndarray:
    """Apply shift, rotate/flip, and HSL jitter with parameters drawn from rng.

    Output has the same dimensions (and type) as the input. Disabled components
    draw nothing from rng, so the draw sequence is reproducible per config.
    """
    pixels = patch.pixels if isinstance(patch, PatchImage) else check_rgb_pixels(patch)
    out = pixels
    if cfg.shift_px_max > 0:
        dx, dy = rng.integers(-cfg.shift_px_max, cfg.shift_px_max + 1, size=2)
        out = shift_window(out, int(dx), int(dy))
    if cfg.rotate_flip:
        k = int(rng.integers(0, 4))
        mirror = bool(rng.integers(0, 2))
        out = dihedral(out, k, mirror)
    if max(cfg.hue_deg_max, cfg.sat_frac_max, cfg.light_frac_max) > 0:
        dh = float(rng.uniform(-cfg.hue_deg_max, cfg.hue_deg_max))
        ds = 1.0 + float(rng.uniform(-cfg.sat_frac_max, cfg.sat_frac_max))
        dl = 1.0 + float(rng.uniform(-cfg.light_frac_max, cfg.light_frac_max))
        out = hsl_jitter(out, dh, ds, dl)
    if out is pixels:
        out = pixels.copy()
    if isinstance(patch, PatchImage):
        return PatchImage(
            grid_x=patch.grid_x, grid_y=patch.grid_y, pixels=out, patch_px=patch.patch_px
        )
    return out
