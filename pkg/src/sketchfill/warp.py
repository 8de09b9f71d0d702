"""Random elastic warp fields and bilinear resampling.

A warp field holds per-pixel displacement offsets in normalized [-1, 1]
coordinates (align_corners convention), so a given deformation magnitude
produces comparable distortion at any resolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from . import ShapeMismatchError


@dataclass
class WarpField:
    """H x W x 2 displacement grid (x-offset, y-offset) in normalized coords."""

    data: np.ndarray
    psi: float

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.ndim != 3 or self.data.shape[2] != 2:
            raise ValueError(f"warp field must be HxWx2, got {self.data.shape}")


def build_warp_field(
    height: int, width: int, kernel_size: int, psi: float, seed: int
) -> WarpField:
    """Smooth noise field: Gaussian noise filtered by a random kernel, scaled by psi.

    Kernel weights and the 2-channel signal are both drawn i.i.d. from N(0, 1);
    each displacement channel is convolved (same padding) with the one shared
    kernel and multiplied by psi. Deterministic for a fixed seed.
    """
    if kernel_size % 2 == 0 or kernel_size < 3:
        raise ValueError(f"kernel size must be odd and >= 3, got {kernel_size}")
    rng = np.random.default_rng(seed)
    theta = rng.standard_normal((kernel_size, kernel_size)).astype(np.float32)
    signal = rng.standard_normal((2, height, width)).astype(np.float32)

    x = torch.from_numpy(signal).unsqueeze(1)  # (2, 1, H, W): channels as batch
    k = torch.from_numpy(theta).reshape(1, 1, kernel_size, kernel_size)
    smoothed = F.conv2d(x, k, padding=kernel_size // 2)
    field = (psi * smoothed.squeeze(1)).permute(1, 2, 0).numpy()
    return WarpField(field, psi)


def identity_grid(height: int, width: int) -> np.ndarray:
    """Base sampling grid in normalized coordinates, (H, W, 2) as (x, y)."""
    ys = np.linspace(-1.0, 1.0, height, dtype=np.float32)
    xs = np.linspace(-1.0, 1.0, width, dtype=np.float32)
    gx, gy = np.meshgrid(xs, ys)
    return np.stack([gx, gy], axis=2)


def grid_sample(source: np.ndarray, field: WarpField) -> np.ndarray:
    """Bilinearly sample `source` at base grid + displacement; outside reads 0."""
    source = np.asarray(source, dtype=np.float32)
    if source.shape != field.data.shape[:2]:
        raise ShapeMismatchError(
            f"source {source.shape} vs field {field.data.shape[:2]}"
        )
    if not field.data.any():
        # zero displacement is the identity warp, bit-exactly
        return source.copy()
    h, w = source.shape
    grid = identity_grid(h, w) + field.data
    src = torch.from_numpy(source).reshape(1, 1, h, w)
    g = torch.from_numpy(grid).unsqueeze(0)
    out = F.grid_sample(
        src, g, mode="bilinear", padding_mode="zeros", align_corners=True
    )
    return out.squeeze().numpy()
