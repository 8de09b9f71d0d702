import base64
import io

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from sketchfill.data import ImageTensor, save_image
from sketchfill.masks import generate_freeform_mask
from sketchfill.server import QUEUE_DEPTH, create_app
from sketchfill.ssa import SsaConfig, simulate_sketch

from conftest import make_toy_image


def png_bytes(arr_uint8):
    buf = io.BytesIO()
    Image.fromarray(arr_uint8).save(buf, format="PNG")
    return buf.getvalue()


def image_png(seed=0):
    img = make_toy_image(seed)
    return png_bytes(np.round(img.to_byte().data).astype(np.uint8))


def mask_png(seed=0, empty=False):
    if empty:
        arr = np.zeros((64, 64), dtype=np.uint8)
    else:
        arr = (generate_freeform_mask(64, 64, seed=seed).data * 255).astype(np.uint8)
    return png_bytes(arr)


def sketch_png(seed=0):
    img = make_toy_image(seed)
    mask = generate_freeform_mask(64, 64, seed=seed)
    sketch, _, _ = simulate_sketch(img, mask, SsaConfig(), seed=seed)
    return png_bytes((sketch.data * 255).astype(np.uint8))


def decode_b64_png(data):
    return np.asarray(Image.open(io.BytesIO(base64.b64decode(data))))


@pytest.fixture(scope="module")
def client(tiny_srn_ckpt, tiny_sin_ckpt):
    app = create_app(str(tiny_srn_ckpt), str(tiny_sin_ckpt))
    with TestClient(app) as c:
        yield c


def files(image=None, mask=None, sketch=None):
    return {
        "image": ("image.png", image or image_png(), "image/png"),
        "mask": ("mask.png", mask or mask_png(), "image/png"),
        "sketch": ("sketch.png", sketch or sketch_png(), "image/png"),
    }


def test_health_503_before_load(tiny_sin_ckpt):
    app = create_app(None, str(tiny_sin_ckpt), defer_load=True)
    with TestClient(app) as c:
        resp = c.get("/api/health")
        assert resp.status_code == 503
        assert resp.json()["code"] == "loading"
        inpaint = c.post("/api/inpaint", files=files())
        assert inpaint.status_code == 503
        c.app.state.registry.load()
        assert c.get("/api/health").status_code == 200


def test_health_reports_hashes(client):
    resp = client.get("/api/health")
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "ok"
    assert set(body["model_versions"]) == {"srn", "sin"}
    assert all(len(h) == 16 for h in body["model_versions"].values())


def test_config_endpoint(client):
    body = client.get("/api/config").json()
    assert body["image_size"] == 64
    assert body["size_multiple"] == 8
    assert body["queue_depth"] == QUEUE_DEPTH
    assert body["refine_available"] is True


def test_inpaint_zero_mask_returns_input(client):
    img_bytes = image_png(3)
    resp = client.post(
        "/api/inpaint", files=files(image=img_bytes, mask=mask_png(empty=True))
    )
    assert resp.status_code == 200
    body = resp.json()
    result = decode_b64_png(body["result"])
    original = np.asarray(Image.open(io.BytesIO(img_bytes)).convert("RGB"))
    np.testing.assert_array_equal(result, original)
    assert "inpaint" in body["timing_ms"]
    assert body["scale"] == 1.0


def test_inpaint_with_refined_sketch(client):
    resp = client.post(
        "/api/inpaint",
        files=files(),
        data={"refine": "true", "return_refined_sketch": "true"},
    )
    assert resp.status_code == 200
    body = resp.json()
    refined = decode_b64_png(body["refined_sketch"])
    assert set(np.unique(refined)) <= {0, 255}
    assert "refine" in body["timing_ms"]


def test_refine_endpoint_binary_png(client):
    resp = client.post("/api/refine", files=files())
    assert resp.status_code == 200
    refined = decode_b64_png(resp.json()["refined_sketch"])
    assert refined.shape == (64, 64)
    assert set(np.unique(refined)) <= {0, 255}


def test_undecodable_image_400(client):
    resp = client.post("/api/inpaint", files=files(image=b"not a png"))
    assert resp.status_code == 400
    body = resp.json()
    assert body["code"] == "undecodable"
    assert body["field"] == "image"


def test_dimension_mismatch_400(client):
    small_mask = png_bytes(np.zeros((32, 32), dtype=np.uint8))
    resp = client.post("/api/inpaint", files=files(mask=small_mask))
    assert resp.status_code == 400
    assert "dimensions differ" in resp.json()["message"]


def test_oversize_input_resized(client):
    big = png_bytes(np.zeros((128, 128, 3), dtype=np.uint8))
    big_mask = png_bytes(np.zeros((128, 128), dtype=np.uint8))
    big_sketch = png_bytes(np.zeros((128, 128), dtype=np.uint8))
    resp = client.post(
        "/api/inpaint", files=files(image=big, mask=big_mask, sketch=big_sketch)
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["scale"] == 0.5
    assert decode_b64_png(body["result"]).shape == (64, 64, 3)


def test_refine_without_refiner_400(tiny_sin_ckpt):
    app = create_app(None, str(tiny_sin_ckpt))
    with TestClient(app) as c:
        resp = c.post("/api/refine", files=files())
        assert resp.status_code == 400
        assert resp.json()["code"] == "no_refiner"
        inpaint = c.post("/api/inpaint", files=files(), data={"refine": "true"})
        assert inpaint.status_code == 400


def test_queue_full_429(client):
    registry = client.app.state.registry
    slots = []
    try:
        for _ in range(QUEUE_DEPTH):
            assert registry.queue_slots.acquire(blocking=False)
            slots.append(True)
        resp = client.post("/api/inpaint", files=files())
        assert resp.status_code == 429
        assert resp.json()["code"] == "busy"
    finally:
        for _ in slots:
            registry.queue_slots.release()
    # queue drained: requests succeed again
    assert client.post("/api/inpaint", files=files()).status_code == 200
