/**
 * DOM wiring: layered canvases (base image, mask tint, sketch strokes),
 * pointer handling, toolbar state, submit flow, and session save/load.
 */

import { ApiClient, ServerError, withLoadingRetry } from "./api";
import { buildBundle, parseBundle } from "./bundle";
import { imagePngBytes, layerToPng, pngToImageBitmap, pngToLayer } from "./png";
import { layerToRgba } from "./raster";
import { CanvasSession, MASK_RADIUS_RANGE, SKETCH_RADIUS_RANGE, Tool } from "./session";

const MASK_TINT: [number, number, number] = [80, 160, 255];
const SKETCH_TINT: [number, number, number] = [20, 20, 20];

export class Editor {
  private session: CanvasSession | null = null;
  private imagePng: Uint8Array | null = null;
  private api: ApiClient;
  private size = 64;

  constructor(private root: HTMLElement, api?: ApiClient) {
    this.api = api ?? new ApiClient();
    this.root.innerHTML = TEMPLATE;
    this.bind();
    void this.loadConfig();
  }

  private el<T extends HTMLElement>(sel: string): T {
    return this.root.querySelector(sel) as T;
  }

  private async loadConfig() {
    try {
      const config = await withLoadingRetry(() => this.api.config(), {
        onRetry: (n, ms) => this.setStatus(`server loading, retry ${n} in ${ms} ms`),
      });
      this.size = config.image_size;
      this.el<HTMLInputElement>("#refine-toggle").disabled = !config.refine_available;
      this.setStatus(`ready (served size ${this.size})`);
    } catch (err) {
      this.setStatus(`cannot reach server: ${(err as Error).message}`);
    }
  }

  private bind() {
    this.el<HTMLInputElement>("#file-input").addEventListener("change", (ev) => {
      const file = (ev.target as HTMLInputElement).files?.[0];
      if (file) void this.loadImageFile(file);
    });
    for (const tool of ["mask", "sketch", "eraser-mask", "eraser-sketch"] as Tool[]) {
      this.el(`#tool-${tool}`).addEventListener("click", () => this.setTool(tool));
    }
    this.el<HTMLInputElement>("#brush-radius").addEventListener("input", (ev) => {
      if (this.session) {
        this.session.brush.radius = Number((ev.target as HTMLInputElement).value);
      }
    });
    this.el<HTMLInputElement>("#refine-toggle").addEventListener("change", (ev) => {
      if (this.session) this.session.refine = (ev.target as HTMLInputElement).checked;
    });
    this.el<HTMLSelectElement>("#category").addEventListener("change", (ev) => {
      if (this.session) {
        this.session.category = (ev.target as HTMLSelectElement).value as "face" | "scene";
      }
    });
    this.el("#undo").addEventListener("click", () => {
      if (this.session?.undo()) this.redraw();
    });
    this.el("#redo").addEventListener("click", () => {
      if (this.session?.redo()) this.redraw();
    });
    this.el("#submit").addEventListener("click", () => void this.submit());
    this.el("#save").addEventListener("click", () => void this.saveSession());
    this.el<HTMLInputElement>("#load-input").addEventListener("change", (ev) => {
      const file = (ev.target as HTMLInputElement).files?.[0];
      if (file) void this.loadSessionFile(file);
    });

    const paint = this.el<HTMLCanvasElement>("#paint-canvas");
    let drawing = false;
    const toPoint = (ev: PointerEvent) => {
      const rect = paint.getBoundingClientRect();
      return {
        x: ((ev.clientX - rect.left) / rect.width) * this.size,
        y: ((ev.clientY - rect.top) / rect.height) * this.size,
      };
    };
    paint.addEventListener("pointerdown", (ev) => {
      if (!this.session) return;
      drawing = true;
      paint.setPointerCapture(ev.pointerId);
      this.session.beginStroke(toPoint(ev));
      this.redraw();
    });
    paint.addEventListener("pointermove", (ev) => {
      if (!drawing || !this.session) return;
      this.session.extendStroke(toPoint(ev));
      this.redraw();
    });
    paint.addEventListener("pointerup", () => {
      drawing = false;
      this.session?.endStroke();
      this.updateControls();
    });
  }

  private setTool(tool: Tool) {
    if (!this.session) return;
    this.session.brush.tool = tool;
    const slider = this.el<HTMLInputElement>("#brush-radius");
    const range = tool.includes("sketch") ? SKETCH_RADIUS_RANGE : MASK_RADIUS_RANGE;
    slider.min = String(range[0]);
    slider.max = String(range[1]);
    const radius = Math.min(Math.max(Number(slider.value), range[0]), range[1]);
    slider.value = String(radius);
    this.session.brush.radius = radius;
    this.updateControls();
  }

  private async loadImageFile(file: File) {
    const raw = new Uint8Array(await file.arrayBuffer());
    const bitmap = await pngToImageBitmap(raw);
    this.imagePng = await imagePngBytes(bitmap, this.size);
    this.session = new CanvasSession(this.size, this.size);
    for (const id of ["#base-canvas", "#paint-canvas", "#result-canvas"]) {
      const canvas = this.el<HTMLCanvasElement>(id);
      canvas.width = this.size;
      canvas.height = this.size;
    }
    const ctx = this.el<HTMLCanvasElement>("#base-canvas").getContext("2d")!;
    ctx.drawImage(bitmap, 0, 0, this.size, this.size);
    this.redraw();
    this.setStatus("image loaded; paint a mask, then submit");
  }

  private redraw() {
    if (!this.session) return;
    const canvas = this.el<HTMLCanvasElement>("#paint-canvas");
    const ctx = canvas.getContext("2d")!;
    ctx.clearRect(0, 0, this.size, this.size);
    const overlay = ctx.createImageData(this.size, this.size);
    const maskRgba = layerToRgba(this.session.mask, MASK_TINT);
    const sketchRgba = layerToRgba(this.session.sketch, SKETCH_TINT);
    for (let i = 0; i < overlay.data.length; i += 4) {
      if (sketchRgba[i + 3]) {
        overlay.data.set(sketchRgba.subarray(i, i + 4), i);
      } else if (maskRgba[i + 3]) {
        overlay.data.set([maskRgba[i], maskRgba[i + 1], maskRgba[i + 2], 140], i);
      }
    }
    ctx.putImageData(overlay, 0, 0);
    this.updateControls();
  }

  private updateControls() {
    const session = this.session;
    this.el<HTMLButtonElement>("#submit").disabled = !session?.canSubmit();
    this.el<HTMLButtonElement>("#undo").disabled = !session?.canUndo();
    this.el<HTMLButtonElement>("#redo").disabled = !session?.canRedo();
    this.el<HTMLButtonElement>("#save").disabled = !session;
    const reason = session?.submitBlockReason();
    this.el("#submit-hint").textContent = reason ?? "";
  }

  private setStatus(text: string) {
    this.el("#status").textContent = text;
  }

  private async submit() {
    const session = this.session;
    if (!session || !this.imagePng || !session.canSubmit()) return;
    session.inFlight = true;
    this.updateControls();
    this.setStatus("inpainting...");
    try {
      const maskPng = await layerToPng(session.mask, this.size, this.size);
      const sketchPng = await layerToPng(session.sketch, this.size, this.size);
      const resp = await withLoadingRetry(
        () => this.api.inpaint(this.imagePng!, maskPng, sketchPng, session.refine),
        { onRetry: (n, ms) => this.setStatus(`server loading, retry ${n} in ${ms} ms`) },
      );
      const resultBytes = Uint8Array.from(atob(resp.result), (c) => c.charCodeAt(0));
      session.lastResult = resultBytes;
      const bitmap = await pngToImageBitmap(resultBytes);
      const ctx = this.el<HTMLCanvasElement>("#result-canvas").getContext("2d")!;
      ctx.drawImage(bitmap, 0, 0, this.size, this.size);
      if (resp.refined_sketch) {
        const refined = Uint8Array.from(atob(resp.refined_sketch), (c) => c.charCodeAt(0));
        const { layer } = await pngToLayer(refined);
        session.sketch = layer;
        this.redraw();
      }
      const timing = Object.entries(resp.timing_ms)
        .map(([k, v]) => `${k} ${v.toFixed(0)} ms`)
        .join(", ");
      this.setStatus(`done (${timing})`);
    } catch (err) {
      if (err instanceof ServerError) {
        this.setStatus(`server error ${err.status}: ${err.body.message}`);
      } else {
        this.setStatus(`request failed: ${(err as Error).message}`);
      }
    } finally {
      session.inFlight = false;
      this.updateControls();
    }
  }

  private async saveSession() {
    const session = this.session;
    if (!session || !this.imagePng) return;
    const data = await buildBundle({
      imagePng: this.imagePng,
      maskPng: await layerToPng(session.mask, this.size, this.size),
      sketchPng: await layerToPng(session.sketch, this.size, this.size),
      resultPng: session.lastResult,
      metadata: {
        image: "image.png",
        mask: "mask.png",
        sketch: "sketch.png",
        category: session.category,
      },
    });
    const url = URL.createObjectURL(new Blob([data as BlobPart], { type: "application/zip" }));
    const a = document.createElement("a");
    a.href = url;
    a.download = "session.zip";
    a.click();
    URL.revokeObjectURL(url);
  }

  private async loadSessionFile(file: File) {
    const bundle = await parseBundle(new Uint8Array(await file.arrayBuffer()));
    const bitmap = await pngToImageBitmap(bundle.imagePng);
    this.imagePng = bundle.imagePng;
    this.session = new CanvasSession(this.size, this.size);
    this.session.category = bundle.metadata.category;
    this.session.mask = (await pngToLayer(bundle.maskPng)).layer;
    this.session.sketch = (await pngToLayer(bundle.sketchPng)).layer;
    for (const id of ["#base-canvas", "#paint-canvas", "#result-canvas"]) {
      const canvas = this.el<HTMLCanvasElement>(id);
      canvas.width = this.size;
      canvas.height = this.size;
    }
    this.el<HTMLCanvasElement>("#base-canvas")
      .getContext("2d")!
      .drawImage(bitmap, 0, 0, this.size, this.size);
    this.el<HTMLSelectElement>("#category").value = bundle.metadata.category;
    this.redraw();
    this.setStatus("session restored");
  }
}

const TEMPLATE = `
  <div class="toolbar">
    <label class="file-button">Open image<input id="file-input" type="file" accept="image/*" hidden></label>
    <label class="file-button">Load session<input id="load-input" type="file" accept=".zip" hidden></label>
    <button id="tool-mask">Mask brush</button>
    <button id="tool-sketch">Sketch pen</button>
    <button id="tool-eraser-mask">Erase mask</button>
    <button id="tool-eraser-sketch">Erase sketch</button>
    <label>Radius <input id="brush-radius" type="range" min="5" max="30" value="12"></label>
    <button id="undo" disabled>Undo</button>
    <button id="redo" disabled>Redo</button>
    <label><input id="refine-toggle" type="checkbox"> Refine sketch</label>
    <label>Category <select id="category">
      <option value="scene">scene</option>
      <option value="face">face</option>
    </select></label>
    <button id="submit" disabled>Inpaint</button>
    <span id="submit-hint"></span>
    <button id="save" disabled>Save session</button>
  </div>
  <div class="workspace">
    <div class="stack">
      <canvas id="base-canvas"></canvas>
      <canvas id="paint-canvas"></canvas>
    </div>
    <canvas id="result-canvas"></canvas>
  </div>
  <div id="status">connecting...</div>
`;
