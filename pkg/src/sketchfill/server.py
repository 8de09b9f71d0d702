"""HTTP inference service consumed by the browser editor and the CLI tests.

Endpoints:
    POST /api/inpaint  multipart (image, mask, sketch, refine?) -> JSON with
                       base64 PNG result, optional refined sketch, timings
    POST /api/refine   multipart (image, mask, sketch) -> refined sketch only
    GET  /api/health   200 + checkpoint hashes once models are loaded, 503 before
    GET  /api/config   served image size and limits

Model forward passes are serialized behind a lock; at most QUEUE_DEPTH
requests may wait, further ones get 429.
"""

from __future__ import annotations

import base64
import hashlib
import io
import threading
import time
from contextlib import asynccontextmanager
from pathlib import Path

import numpy as np
from fastapi import FastAPI, File, Form, UploadFile
from fastapi.responses import JSONResponse
from PIL import Image

from . import SketchfillError
from .data import BinaryMask, ImageTensor, SketchMap
from .sin import SinModel, inpaint
from .srn import SrnModel, refine_sketch
from .training import load_sin, load_srn

QUEUE_DEPTH = 8


class ModelRegistry:
    """Holds the loaded model pair and serializes forward passes."""

    def __init__(self, srn_path: str | None, sin_path: str | None, image_size: int = 64):
        self.srn_path = srn_path
        self.sin_path = sin_path
        self.image_size = image_size
        self.srn: SrnModel | None = None
        self.sin: SinModel | None = None
        self.hashes: dict[str, str] = {}
        self.ready = False
        self.lock = threading.Lock()
        self.queue_slots = threading.BoundedSemaphore(QUEUE_DEPTH)

    def load(self) -> None:
        if self.sin_path:
            self.sin, meta = load_sin(self.sin_path)
            self.image_size = meta.get("config", {}).get("image_size", self.image_size)
            self.hashes["sin"] = _file_hash(self.sin_path)
        if self.srn_path:
            self.srn, _ = load_srn(self.srn_path)
            self.hashes["srn"] = _file_hash(self.srn_path)
        self.ready = True


def _file_hash(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def _error(status: int, code: str, message: str, field: str | None = None) -> JSONResponse:
    body = {"code": code, "message": message}
    if field:
        body["field"] = field
    return JSONResponse(status_code=status, content=body)


def _decode_image(data: bytes, field: str) -> np.ndarray:
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except Exception:
        raise _DecodeError(field)
    return np.asarray(img.convert("RGB"), dtype=np.float32)


class _DecodeError(Exception):
    def __init__(self, field: str):
        self.field = field


def _png_bytes(arr: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode()


def create_app(
    srn_path: str | None = None,
    sin_path: str | None = None,
    image_size: int = 64,
    defer_load: bool = False,
) -> FastAPI:
    registry = ModelRegistry(srn_path, sin_path, image_size)

    @asynccontextmanager
    async def _lifespan(_app: FastAPI):
        if not defer_load:
            registry.load()
        yield

    app = FastAPI(title="sketchfill", lifespan=_lifespan)
    app.state.registry = registry

    @app.get("/api/health")
    def health():
        if not registry.ready:
            return _error(503, "loading", "checkpoints are still loading")
        return {"status": "ok", "model_versions": registry.hashes}

    @app.get("/api/config")
    def config():
        return {
            "image_size": registry.image_size,
            "size_multiple": 8,
            "queue_depth": QUEUE_DEPTH,
            "refine_available": registry.srn is not None,
        }

    def _prepare(image_bytes, mask_bytes, sketch_bytes):
        img = _decode_image(image_bytes, "image")
        mask_arr = _decode_image(mask_bytes, "mask").mean(axis=2)
        sketch_arr = _decode_image(sketch_bytes, "sketch").mean(axis=2)
        if img.shape[:2] != mask_arr.shape or img.shape[:2] != sketch_arr.shape:
            raise SketchfillError("image, mask, and sketch dimensions differ")
        size = registry.image_size
        scale = 1.0
        if img.shape[:2] != (size, size):
            scale = size / max(img.shape[:2])
            img = np.asarray(
                Image.fromarray(img.astype(np.uint8)).resize((size, size), Image.BILINEAR),
                dtype=np.float32,
            )
            mask_arr = np.asarray(
                Image.fromarray(mask_arr.astype(np.uint8)).resize((size, size), Image.NEAREST),
                dtype=np.float32,
            )
            sketch_arr = np.asarray(
                Image.fromarray(sketch_arr.astype(np.uint8)).resize((size, size), Image.NEAREST),
                dtype=np.float32,
            )
        image = ImageTensor(img, "byte").to_unit_signed()
        mask = BinaryMask((mask_arr >= 127.5).astype(np.float32))
        sketch = SketchMap((sketch_arr >= 127.5).astype(np.float32))
        return image, mask, sketch, scale

    @app.post("/api/inpaint")
    async def api_inpaint(
        image: UploadFile = File(...),
        mask: UploadFile = File(...),
        sketch: UploadFile = File(...),
        refine: bool = Form(False),
        return_refined_sketch: bool = Form(False),
    ):
        if not registry.ready:
            return _error(503, "loading", "checkpoints are still loading")
        if refine and registry.srn is None:
            return _error(400, "no_refiner", "no refiner checkpoint is loaded", "refine")
        if not registry.queue_slots.acquire(blocking=False):
            return _error(429, "busy", "request queue is full, retry later")
        try:
            timings: dict[str, float] = {}
            t0 = time.perf_counter()
            try:
                img, m, s, scale = _prepare(
                    await image.read(), await mask.read(), await sketch.read()
                )
            except _DecodeError as exc:
                return _error(400, "undecodable", f"cannot decode {exc.field}", exc.field)
            except SketchfillError as exc:
                return _error(400, "bad_request", str(exc), "mask")
            timings["decode"] = (time.perf_counter() - t0) * 1000

            refined = None
            with registry.lock:
                if refine:
                    t = time.perf_counter()
                    refined = refine_sketch(img, m, s, registry.srn)
                    timings["refine"] = (time.perf_counter() - t) * 1000
                    s = refined
                t = time.perf_counter()
                result = inpaint(img, m, s, registry.sin, refine=False)
                timings["inpaint"] = (time.perf_counter() - t) * 1000

            body = {
                "result": _png_bytes(np.round(result.to_byte().data).astype(np.uint8)),
                "timing_ms": timings,
                "model_versions": registry.hashes,
                "scale": scale,
                "image_size": registry.image_size,
            }
            if return_refined_sketch and refined is not None:
                body["refined_sketch"] = _png_bytes(
                    (refined.data * 255).astype(np.uint8)
                )
            return body
        finally:
            registry.queue_slots.release()

    @app.post("/api/refine")
    async def api_refine(
        image: UploadFile = File(...),
        mask: UploadFile = File(...),
        sketch: UploadFile = File(...),
    ):
        if not registry.ready:
            return _error(503, "loading", "checkpoints are still loading")
        if registry.srn is None:
            return _error(400, "no_refiner", "no refiner checkpoint is loaded", "refine")
        try:
            img, m, s, scale = _prepare(
                await image.read(), await mask.read(), await sketch.read()
            )
        except _DecodeError as exc:
            return _error(400, "undecodable", f"cannot decode {exc.field}", exc.field)
        except SketchfillError as exc:
            return _error(400, "bad_request", str(exc), "mask")
        with registry.lock:
            refined = refine_sketch(img, m, s, registry.srn)
        return {
            "refined_sketch": _png_bytes((refined.data * 255).astype(np.uint8)),
            "scale": scale,
            "model_versions": registry.hashes,
        }

    return app


def serve(
    srn_path: str | None,
    sin_path: str | None,
    port: int = 8000,
    host: str = "127.0.0.1",
) -> None:
    import uvicorn

    app = create_app(srn_path, sin_path)
    uvicorn.run(app, host=host, port=port)
