"""Free-form hole masks drawn as random polyline brush strokes."""

from __future__ import annotations

from dataclasses import dataclass

import cv2
import numpy as np

from .data import BinaryMask

MAX_RATIO = 0.6


@dataclass
class FreeformMaskParams:
    """Stroke statistics, tuned at 256 resolution and scaled for smaller ones."""

    max_strokes: int = 8
    min_vertices: int = 4
    max_vertices: int = 12
    brush_width_range: tuple[int, int] = (12, 40)
    max_angle: float = 2 * np.pi / 5
    reference_size: int = 256


def generate_freeform_mask(
    height: int,
    width: int,
    seed: int,
    params: FreeformMaskParams | None = None,
) -> BinaryMask:
    """Union of random round-capped polyline strokes; pure in (h, w, seed, params).

    The covered ratio is capped at MAX_RATIO by stopping early once the
    running union exceeds it.
    """
    if height < 16 or width < 16:
        raise ValueError(f"mask size {height}x{width} too small (min 16)")
    params = params or FreeformMaskParams()
    rng = np.random.default_rng(seed)
    canvas = np.zeros((height, width), dtype=np.uint8)

    scale = min(height, width) / params.reference_size
    w_lo = max(1, int(round(params.brush_width_range[0] * scale)))
    w_hi = max(w_lo + 1, int(round(params.brush_width_range[1] * scale)))
    n_strokes = int(rng.integers(1, params.max_strokes + 1)) if params.max_strokes > 0 else 0
    max_len = min(height, width) / 4

    for _ in range(n_strokes):
        n_vertices = int(rng.integers(max(2, params.min_vertices), params.max_vertices + 1))
        brush = int(rng.integers(w_lo, w_hi + 1))
        x = float(rng.integers(0, width))
        y = float(rng.integers(0, height))
        angle = float(rng.uniform(0, 2 * np.pi))
        stroke = np.zeros_like(canvas)
        cv2.circle(stroke, (int(x), int(y)), brush // 2, 1, -1)
        for _ in range(n_vertices - 1):
            angle += float(rng.uniform(-params.max_angle, params.max_angle))
            length = float(rng.uniform(max_len / 2, max_len))
            nx = np.clip(x + length * np.cos(angle), 0, width - 1)
            ny = np.clip(y + length * np.sin(angle), 0, height - 1)
            cv2.line(stroke, (int(x), int(y)), (int(nx), int(ny)), 1, brush)
            cv2.circle(stroke, (int(nx), int(ny)), brush // 2, 1, -1)
            x, y = nx, ny
        union = np.maximum(canvas, stroke)
        if union.mean() > MAX_RATIO:
            break
        canvas = union

    if n_strokes > 0 and canvas.max() == 0:
        # every candidate stroke overshot the area cap: fall back to a small disc
        cx = int(rng.integers(width // 4, 3 * width // 4))
        cy = int(rng.integers(height // 4, 3 * height // 4))
        cv2.circle(canvas, (cx, cy), max(2, min(height, width) // 8), 1, -1)

    return BinaryMask(canvas.astype(np.float32))
