import json
from pathlib import Path

import numpy as np
import pytest

from sketchfill.data import ImageTensor, save_image

# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_toy_image(seed: int, size: int = 64) -> ImageTensor:
    """Structured synthetic image: colored background with shapes and edges."""
    rng = np.random.default_rng(seed)
    img = np.zeros((size, size, 3), dtype=np.float32)
    img[:] = rng.uniform(-0.8, -0.2, 3)
    ys, xs = np.mgrid[0:size, 0:size]
    # gradient band
    img[:, :, 0] += (xs / size).astype(np.float32) * 0.5
    # a filled circle and a rectangle with distinct colors
    cy, cx = rng.integers(size // 4, 3 * size // 4, 2)
    r = int(rng.integers(size // 8, size // 4))
    circle = (ys - cy) ** 2 + (xs - cx) ** 2 <= r * r
    img[circle] = rng.uniform(0.2, 0.9, 3)
    y0, x0 = rng.integers(0, size // 2, 2)
    h, w = rng.integers(size // 6, size // 3, 2)
    img[y0 : y0 + h, x0 : x0 + w] = rng.uniform(-0.9, 0.9, 3)
    return ImageTensor(np.clip(img, -1, 1), "unit_signed")


def write_corpus(root: Path, count: int, size: int = 64, seed: int = 0) -> Path:
    """Write toy images + manifest; returns the manifest path."""
    root.mkdir(parents=True, exist_ok=True)
    records = []
    for i in range(count):
        name = f"img{i}.png"
        save_image(make_toy_image(seed + i, size), root / name)
        records.append({"image": name})
    manifest = root / "manifest.json"
    with open(manifest, "w") as fh:
        json.dump(records, fh)
    return manifest


@pytest.fixture(scope="session")
def toy_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    return write_corpus(root, 8, size=64)


@pytest.fixture(scope="session")
def tiny_srn_ckpt(tmp_path_factory, toy_corpus):
    from sketchfill.training import TrainConfig, train_srn

    config = TrainConfig(
        stage="srn", steps=2, batch_size=2, image_size=64,
        width_multiplier=0.25, manifest=str(toy_corpus),
    )
    return train_srn(config, tmp_path_factory.mktemp("srn-run"))


@pytest.fixture(scope="session")
def tiny_sin_ckpt(tmp_path_factory, toy_corpus):
    from sketchfill.training import TrainConfig, train_sin

    config = TrainConfig(
        stage="sin", steps=2, batch_size=2, image_size=64,
        width_multiplier=0.125, manifest=str(toy_corpus),
    )
    return train_sin(config, tmp_path_factory.mktemp("sin-run"))
