"""Sketch refinement: a gated-conv registration U-net followed by a
vanilla-conv enhancement network, both with encoder/decoder skip connections
and sigmoid output heads."""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from . import ShapeMismatchError
from .blocks import GatedConv2d, ResidualConvBlock, scaled_channels
from .data import BinaryMask, ImageTensor, SketchMap, binarize


def _gc(cin, cout, stride=1):
    return GatedConv2d(cin, cout, 3, stride, activation="leaky_relu", norm="instance")


class RegistrationModule(nn.Module):
    """Fixes spatial misalignment; input is concat(masked image, mask, sketch)."""

    def __init__(self, width_multiplier: float = 1.0, in_channels: int = 5):
        super().__init__()
        c32, c64, c128, c192 = (scaled_channels(c, width_multiplier) for c in (32, 64, 128, 192))
        self.enc1 = _gc(in_channels, c32)            # full res
        self.enc2 = _gc(c32, c64, stride=2)          # 1/2
        self.enc3 = _gc(c64, c128, stride=2)         # 1/4
        self.enc4 = _gc(c128, c192, stride=2)        # 1/8
        self.mid = nn.Sequential(_gc(c192, c192), _gc(c192, c192), _gc(c192, c192))
        self.dec3 = _gc(c192 + c128, c128)           # after upsample to 1/4
        self.dec2 = _gc(c128 + c64, c64)             # 1/2
        self.dec1 = _gc(c64 + c32, c32)              # full res
        self.head = _gc(c32, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        e1 = self.enc1(x)
        e2 = self.enc2(e1)
        e3 = self.enc3(e2)
        m = self.mid(self.enc4(e3))
        d3 = self.dec3(torch.cat([F.interpolate(m, scale_factor=2, mode="nearest"), e3], 1))
        d2 = self.dec2(torch.cat([F.interpolate(d3, scale_factor=2, mode="nearest"), e2], 1))
        d1 = self.dec1(torch.cat([F.interpolate(d2, scale_factor=2, mode="nearest"), e1], 1))
        return torch.sigmoid(self.head(d1))


def _vc(cin, cout, k=3, stride=1):
    return nn.Sequential(nn.Conv2d(cin, cout, k, stride, k // 2), nn.ReLU())


class EnhancementModule(nn.Module):
    """Fixes structural incoherence of the coarse sketch; vanilla convs only."""

    def __init__(self, width_multiplier: float = 1.0):
        super().__init__()
        c32, c64, c128, c256 = (scaled_channels(c, width_multiplier) for c in (32, 64, 128, 256))
        self.enc1 = _vc(1, c32, k=7)                 # full res
        self.enc2 = _vc(c32, c64, stride=2)          # 1/2
        self.enc3 = _vc(c64, c128, stride=2)         # 1/4
        self.enc4 = _vc(c128, c128, stride=2)        # 1/8
        self.body = nn.Sequential(
            _vc(c128, c128),
            _vc(c128, c256),
            ResidualConvBlock(c256),
            ResidualConvBlock(c256),
            ResidualConvBlock(c256),
            ResidualConvBlock(c256),
            _vc(c256, c128),
            _vc(c128, c128),
        )
        self.dec3 = _vc(c128 + c128, c128)           # 1/4
        self.dec2 = _vc(c128 + c64, c64)             # 1/2
        self.dec1 = _vc(c64 + c32, c32)              # full res
        self.head = nn.Conv2d(c32, 1, 3, 1, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        e1 = self.enc1(x)
        e2 = self.enc2(e1)
        e3 = self.enc3(e2)
        b = self.body(self.enc4(e3))
        d3 = self.dec3(torch.cat([F.interpolate(b, scale_factor=2, mode="nearest"), e3], 1))
        d2 = self.dec2(torch.cat([F.interpolate(d3, scale_factor=2, mode="nearest"), e2], 1))
        d1 = self.dec1(torch.cat([F.interpolate(d2, scale_factor=2, mode="nearest"), e1], 1))
        return torch.sigmoid(self.head(d1))


class SrnModel(nn.Module):
    """Two-stage refiner: coarse registration then enhancement."""

    def __init__(self, width_multiplier: float = 1.0):
        super().__init__()
        self.width_multiplier = width_multiplier
        self.rm = RegistrationModule(width_multiplier)
        self.em = EnhancementModule(width_multiplier)

    def forward(
        self, masked_image: torch.Tensor, mask: torch.Tensor, sketch: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        s_coarse = self.rm(torch.cat([masked_image, mask, sketch], dim=1))
        s_hat = self.em(s_coarse)
        return s_coarse, s_hat


def _nchw(arr: np.ndarray) -> torch.Tensor:
    t = torch.from_numpy(np.asarray(arr, dtype=np.float32))
    if t.dim() == 2:
        t = t.unsqueeze(0)
    else:
        t = t.permute(2, 0, 1)
    return t.unsqueeze(0)


def refine_sketch(
    image: ImageTensor,
    mask: BinaryMask,
    sketch: SketchMap,
    model: SrnModel,
    retain_valid: bool = False,
) -> SketchMap:
    """Run the refiner and binarize its output.

    By default only strokes inside the mask region are kept, matching the
    test-protocol convention; retain_valid=True returns the full-frame result.
    """
    if mask.shape != image.data.shape[:2] or sketch.shape != mask.shape:
        raise ShapeMismatchError("image, mask, and sketch must share HxW")
    arr = image.to_unit_signed().data
    masked = arr * (1.0 - mask.data[:, :, None])
    model.eval()
    with torch.no_grad():
        _, s_hat = model(_nchw(masked), _nchw(mask.data), _nchw(sketch.data))
    refined = binarize(s_hat[0, 0].numpy(), 0.5)
    if not retain_valid:
        refined = SketchMap(refined.data * mask.data)
    return refined
