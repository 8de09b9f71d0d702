"""Training-sketch synthesis: warp detected foreground edges, keep valid-region
edges intact.

The simulated sketch mimics three gaps between user strokes and true edges:
spatial misalignment (elastic warp), broken strokes (warped pixels leaving
their neighbors), and abstraction (edges taken from the salient foreground
rather than the full frame).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import BinaryMask, EdgeMap, ImageTensor, SketchMap, binarize
from .providers import get_edge_provider, get_foreground_provider
from .warp import WarpField, build_warp_field, grid_sample


@dataclass
class SsaConfig:
    kernel_size: int = 11
    psi_min: float = 0.01
    psi_max: float = 0.8
    seed: int = 0
    edge_provider: str = "sobel"
    saliency_provider: str = "full"
    # warp the foreground edge per the algorithm; set True to warp and compose
    # the foreground edge on both sides instead
    compose_foreground: bool = False

    def __post_init__(self):
        if self.kernel_size % 2 == 0 or self.kernel_size < 3:
            raise ValueError("kernel_size must be odd and >= 3")
        if not (0 <= self.psi_min <= self.psi_max):
            raise ValueError("need 0 <= psi_min <= psi_max")


def detect_edges(
    image: ImageTensor, config: SsaConfig | None = None, source_path: str | None = None
) -> EdgeMap:
    provider = get_edge_provider((config or SsaConfig()).edge_provider)
    return provider(image, source_path)


def extract_foreground(
    image: ImageTensor, config: SsaConfig | None = None, source_path: str | None = None
) -> BinaryMask:
    provider = get_foreground_provider((config or SsaConfig()).saliency_provider)
    return provider(image, source_path)


def _apply_foreground(image: ImageTensor, fg: BinaryMask) -> ImageTensor:
    arr = image.to_unit_signed().data
    m = fg.data[:, :, None]
    # background pixels pushed to black (-1) so they contribute no edges
    return ImageTensor(arr * m + (m - 1.0), "unit_signed")


def simulate_sketch(
    image: ImageTensor,
    mask: BinaryMask,
    config: SsaConfig,
    seed: int,
    psi: float | None = None,
    source_path: str | None = None,
) -> tuple[SketchMap, EdgeMap, EdgeMap]:
    """Run the full simulation; returns (sketch S, edge E, foreground edge E_f).

    Steps: detect foreground and its edge, draw a smooth random warp field with
    magnitude psi ~ U[psi_min, psi_max], resample the foreground edge through
    it, binarize, then keep ground-truth edges in the valid region:
    S = warp(E_f) * M + E * (1 - M).
    """
    if mask.shape != image.data.shape[:2]:
        raise ValueError(f"mask {mask.shape} does not match image {image.data.shape[:2]}")
    rng = np.random.default_rng(seed)
    if psi is None:
        psi = float(rng.uniform(config.psi_min, config.psi_max))

    fg = extract_foreground(image, config, source_path)
    edge = detect_edges(image, config, source_path)
    fg_edge_raw = detect_edges(_apply_foreground(image, fg), config, source_path)
    # keep the foreground edge inside the foreground support
    fg_edge = EdgeMap(fg_edge_raw.data * fg.data)

    h, w = mask.shape
    field_seed = int(rng.integers(0, 2**31 - 1))
    field = build_warp_field(h, w, config.kernel_size, psi, field_seed)
    warped = grid_sample(fg_edge.data, field)
    warped_sketch = binarize(np.clip(warped, 0.0, 1.0), 0.5)

    valid_edge = fg_edge if config.compose_foreground else edge
    sketch = SketchMap(warped_sketch.data * mask.data + valid_edge.data * (1.0 - mask.data))
    return sketch, edge, fg_edge


def simulate_batch(
    images: list[ImageTensor],
    masks: list[BinaryMask],
    config: SsaConfig,
    seed: int,
    per_sample_psi: bool = False,
) -> list[tuple[SketchMap, EdgeMap, EdgeMap]]:
    """Simulate a batch; psi is shared across the batch unless per_sample_psi."""
    rng = np.random.default_rng(seed)
    shared_psi = None
    if not per_sample_psi:
        shared_psi = float(rng.uniform(config.psi_min, config.psi_max))
    out = []
    for i, (img, m) in enumerate(zip(images, masks)):
        out.append(simulate_sketch(img, m, config, seed + 1 + i, psi=shared_psi))
    return out
