/**
 * Editor session state: base image, two binary paint layers, brush state,
 * refine toggle, request lifecycle. All logic here is DOM-free.
 */

import { HistoryStack, Snapshot } from "./history";
import {
  Point,
  createLayer,
  layerIsEmpty,
  rasterizeStroke,
} from "./raster";

export type Tool = "mask" | "sketch" | "eraser-mask" | "eraser-sketch";

export const SKETCH_RADIUS_RANGE: [number, number] = [0.5, 1.5]; // 1-3 px strokes
export const MASK_RADIUS_RANGE: [number, number] = [5, 30]; // 10-60 px brush

export interface BrushState {
  tool: Tool;
  radius: number;
}

export class CanvasSession {
  readonly width: number;
  readonly height: number;
  mask: Uint8Array;
  sketch: Uint8Array;
  brush: BrushState = { tool: "mask", radius: 12 };
  refine = false;
  category: "face" | "scene" = "scene";
  inFlight = false;
  lastResult: Uint8Array | null = null; // PNG bytes of the last server result
  private history = new HistoryStack();
  private strokePoints: Point[] | null = null;

  constructor(width: number, height: number) {
    this.width = width;
    this.height = height;
    this.mask = createLayer(width, height);
    this.sketch = createLayer(width, height);
  }

  private snapshot(): Snapshot {
    return { mask: this.mask, sketch: this.sketch };
  }

  private targetLayer(): Uint8Array {
    return this.brush.tool === "mask" || this.brush.tool === "eraser-mask"
      ? this.mask
      : this.sketch;
  }

  private paintValue(): 0 | 1 {
    return this.brush.tool.startsWith("eraser") ? 0 : 1;
  }

  /** One history entry per stroke: snapshot taken when the stroke starts. */
  beginStroke(point: Point): void {
    this.history.push(this.snapshot());
    this.strokePoints = [point];
    rasterizeStroke(
      this.targetLayer(), this.width, this.height, [point], this.brush.radius, this.paintValue(),
    );
  }

  extendStroke(point: Point): void {
    if (!this.strokePoints) return;
    const last = this.strokePoints[this.strokePoints.length - 1];
    this.strokePoints.push(point);
    rasterizeStroke(
      this.targetLayer(), this.width, this.height, [last, point], this.brush.radius, this.paintValue(),
    );
  }

  endStroke(): void {
    this.strokePoints = null;
  }

  undo(): boolean {
    const restored = this.history.undo(this.snapshot());
    if (!restored) return false;
    this.mask = restored.mask;
    this.sketch = restored.sketch;
    return true;
  }

  redo(): boolean {
    const restored = this.history.redo(this.snapshot());
    if (!restored) return false;
    this.mask = restored.mask;
    this.sketch = restored.sketch;
    return true;
  }

  canUndo(): boolean {
    return this.history.canUndo();
  }

  canRedo(): boolean {
    return this.history.canRedo();
  }

  /** Submit is unreachable while in flight or with an empty mask. */
  canSubmit(): boolean {
    return !this.inFlight && !layerIsEmpty(this.mask);
  }

  /** Reason shown to the user when submit is disabled; null when allowed. */
  submitBlockReason(): string | null {
    if (this.inFlight) return "a request is already in flight";
    if (layerIsEmpty(this.mask)) return "paint a mask region first";
    return null;
  }
}
