/** Heatmap overlay rendering from the service's preview raster.
 *
 * The raster feeds pixels only; all counts and fractions displayed next to
 * the overlay come from the service (see state.ackPreview).
 */

import type { PreviewRaster } from "./api.ts";

export type OverlayMode = "binary" | "probability";

export interface Rgba {
  r: number;
  g: number;
  b: number;
  a: number;
}

export const POSITIVE_COLOR: Rgba = { r: 220, g: 38, b: 38, a: 255 }; // red
export const NEGATIVE_COLOR: Rgba = { r: 37, g: 99, b: 235, a: 255 }; // blue

/** Color of one preview cell; decision rule matches the service (value >= t). */
export function cellColor(
  value: number,
  threshold: number,
  mode: OverlayMode,
  opacity: number,
): Rgba {
  const alpha = Math.round(255 * Math.min(1, Math.max(0, opacity)));
  if (mode === "probability") {
    const v = Math.round(255 * Math.min(1, Math.max(0, value)));
    return { r: v, g: v, b: v, a: alpha };
  }
  const base = value >= threshold ? POSITIVE_COLOR : NEGATIVE_COLOR;
  return { ...base, a: value >= threshold ? alpha : Math.round(alpha * 0.45) };
}

/** Flatten a raster into RGBA bytes (row-major, one pixel per cell). */
export function rasterToRgba(
  raster: PreviewRaster,
  threshold: number,
  mode: OverlayMode,
  opacity: number,
): Uint8ClampedArray<ArrayBuffer> {
  const out = new Uint8ClampedArray(new ArrayBuffer(raster.n_rows * raster.n_cols * 4));
  let i = 0;
  for (const row of raster.values) {
    for (const value of row) {
      const { r, g, b, a } = cellColor(value, threshold, mode, opacity);
      out[i] = r;
      out[i + 1] = g;
      out[i + 2] = b;
      out[i + 3] = a;
      i += 4;
    }
  }
  return out;
}

export function countPositiveCells(raster: PreviewRaster, threshold: number): number {
  // display-side helper for tests; the UI itself never shows this number
  let n = 0;
  for (const row of raster.values) for (const v of row) if (v >= threshold) n += 1;
  return n;
}

/** Paint the raster onto a canvas, scaled with crisp cell edges. */
export function drawHeatmap(
  canvas: HTMLCanvasElement,
  raster: PreviewRaster,
  threshold: number,
  mode: OverlayMode,
  opacity: number,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const cell = Math.max(
    1,
    Math.floor(Math.min(canvas.width / raster.n_cols, canvas.height / raster.n_rows)),
  );
  const image = new ImageData(
    rasterToRgba(raster, threshold, mode, opacity),
    raster.n_cols,
    raster.n_rows,
  );
  const off = document.createElement("canvas");
  off.width = raster.n_cols;
  off.height = raster.n_rows;
  off.getContext("2d")!.putImageData(image, 0, 0);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(off, 0, 0, raster.n_cols * cell, raster.n_rows * cell);
}
