/**
 * Pure raster operations on binary paint layers.
 *
 * A layer is a Uint8Array of 0/1 values in row-major order, one byte per
 * pixel. Keeping strokes on plain buffers (instead of 2D-canvas alpha) makes
 * the binary-export invariant hold by construction and keeps everything
 * testable outside the browser.
 */

export interface Point {
  x: number;
  y: number;
}

export function createLayer(width: number, height: number): Uint8Array {
  return new Uint8Array(width * height);
}

/** Paint (value=1) or erase (value=0) a filled disc; out-of-canvas clipped. */
export function stampDisc(
  layer: Uint8Array,
  width: number,
  height: number,
  cx: number,
  cy: number,
  radius: number,
  value: 0 | 1,
): void {
  const r = Math.max(0.5, radius);
  const x0 = Math.max(0, Math.floor(cx - r));
  const x1 = Math.min(width - 1, Math.ceil(cx + r));
  const y0 = Math.max(0, Math.floor(cy - r));
  const y1 = Math.min(height - 1, Math.ceil(cy + r));
  const r2 = r * r;
  for (let y = y0; y <= y1; y++) {
    for (let x = x0; x <= x1; x++) {
      const dx = x - cx;
      const dy = y - cy;
      if (dx * dx + dy * dy <= r2) {
        layer[y * width + x] = value;
      }
    }
  }
}

/** Round-cap polyline: discs stamped densely along every segment. */
export function rasterizeStroke(
  layer: Uint8Array,
  width: number,
  height: number,
  points: Point[],
  radius: number,
  value: 0 | 1,
): void {
  if (points.length === 0) return;
  stampDisc(layer, width, height, points[0].x, points[0].y, radius, value);
  for (let i = 1; i < points.length; i++) {
    const a = points[i - 1];
    const b = points[i];
    const dist = Math.hypot(b.x - a.x, b.y - a.y);
    const steps = Math.max(1, Math.ceil(dist / Math.max(1, radius * 0.5)));
    for (let s = 1; s <= steps; s++) {
      const t = s / steps;
      stampDisc(
        layer,
        width,
        height,
        a.x + (b.x - a.x) * t,
        a.y + (b.y - a.y) * t,
        radius,
        value,
      );
    }
  }
}

/** Layer -> RGBA bytes: white where painted, transparent elsewhere. */
export function layerToRgba(layer: Uint8Array, tint: [number, number, number]): Uint8ClampedArray {
  const out = new Uint8ClampedArray(layer.length * 4);
  for (let i = 0; i < layer.length; i++) {
    if (layer[i]) {
      out[i * 4] = tint[0];
      out[i * 4 + 1] = tint[1];
      out[i * 4 + 2] = tint[2];
      out[i * 4 + 3] = 255;
    }
  }
  return out;
}

/** Layer -> grayscale RGBA for server upload: strict {0,255}, opaque. */
export function layerToBinaryRgba(layer: Uint8Array): Uint8ClampedArray {
  const out = new Uint8ClampedArray(layer.length * 4);
  for (let i = 0; i < layer.length; i++) {
    const v = layer[i] ? 255 : 0;
    out[i * 4] = v;
    out[i * 4 + 1] = v;
    out[i * 4 + 2] = v;
    out[i * 4 + 3] = 255;
  }
  return out;
}

/**
 * RGBA bytes -> layer, thresholding alpha-weighted intensity at 0.5.
 * Accepts both alpha-painted layers and opaque grayscale PNGs.
 */
export function rgbaToLayer(rgba: Uint8ClampedArray | Uint8Array, width: number, height: number): Uint8Array {
  const layer = new Uint8Array(width * height);
  for (let i = 0; i < layer.length; i++) {
    const lum = (rgba[i * 4] + rgba[i * 4 + 1] + rgba[i * 4 + 2]) / 3;
    const alpha = rgba[i * 4 + 3] / 255;
    layer[i] = (lum / 255) * alpha >= 0.5 ? 1 : 0;
  }
  return layer;
}

export function layerIsEmpty(layer: Uint8Array): boolean {
  return !layer.some((v) => v !== 0);
}

export function layersEqual(a: Uint8Array, b: Uint8Array): boolean {
  if (a.length !== b.length) return false;
  for (let i = 0; i < a.length; i++) {
    if (a[i] !== b[i]) return false;
  }
  return true;
}
