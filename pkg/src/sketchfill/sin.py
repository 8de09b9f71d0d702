"""Sketch-modulated inpainting: a partial sketch encoder producing a
coarse-to-fine feature pyramid, a Fourier-conv restoration backbone whose
encoder stages are modulated by those features, and a patch discriminator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from . import ShapeMismatchError, SketchfillError
from .blocks import (
    FastFourierConv,
    GatedConv2d,
    ResidualConvBlock,
    SketchFeatureAggregation,
    scaled_channels,
)
from .data import BinaryMask, ImageTensor, SketchMap, composite
from .srn import SrnModel, _nchw, refine_sketch


@dataclass
class SinConfig:
    width_multiplier: float = 1.0
    taps: int = 4               # how many pyramid levels feed the encoder (1..4)
    use_mask_channel: bool = True
    ffc_blocks: int = 9

    def __post_init__(self):
        if not 1 <= self.taps <= 4:
            raise ValueError("taps must be in 1..4")
        if self.ffc_blocks < 1:
            raise ValueError("need at least one global block")


def _pse_gc(cin, cout, k=4, stride=2, act=None):
    return GatedConv2d(cin, cout, k, stride, padding=1, activation=act, norm="batch")


class PartialSketchEncoder(nn.Module):
    """Gated-conv encoder over (sketch, mask); taps its last four stages."""

    def __init__(self, config: SinConfig):
        super().__init__()
        w = config.width_multiplier
        c64, c128, c256, c512 = (scaled_channels(c, w) for c in (64, 128, 256, 512))
        cin = 2 if config.use_mask_channel else 1
        self.use_mask_channel = config.use_mask_channel
        self.stem = GatedConv2d(cin, c64, 7, 1, padding=3, activation="relu", norm="batch")
        self.down1 = _pse_gc(c64, c128)    # 1/2
        self.down2 = _pse_gc(c128, c256)   # 1/4
        self.down3 = _pse_gc(c256, c512)   # 1/8
        self.res = nn.Sequential(
            ResidualConvBlock(c512, batch_norm=True, spectral=True),
            ResidualConvBlock(c512, batch_norm=True, spectral=True),
            ResidualConvBlock(c512, batch_norm=True, spectral=True),
        )
        self.tap2 = _pse_gc(c512, c256)    # 1/16
        self.tap3 = _pse_gc(c256, c128)    # 1/32
        self.tap4 = _pse_gc(c128, c64)     # 1/64
        self.channels = (c512, c256, c128, c64)

    def forward(self, sketch: torch.Tensor, mask: torch.Tensor) -> list[torch.Tensor]:
        x = torch.cat([sketch, mask], 1) if self.use_mask_channel else sketch
        h = self.down3(self.down2(self.down1(self.stem(x))))
        f1 = self.res(h)        # coarsest semantics, 512 channels
        f2 = self.tap2(f1)
        f3 = self.tap3(f2)
        f4 = self.tap4(f3)
        return [f1, f2, f3, f4]


def pyramid_routing(pyramid: list[torch.Tensor] | None, taps: int):
    """Map pyramid entries onto the three encoder modulation stages.

    With all four taps, the two coarsest features are concatenated (coarsest
    upsampled) and routed to the deepest stage; dropping taps removes features
    starting from the coarse end, leaving unfed stages unmodulated.
    """
    if pyramid is None:
        return (None, None, None)
    f1, f2, f3, f4 = pyramid
    deep = mid = shallow = None
    if taps >= 1:
        shallow = f4
    if taps >= 2:
        mid = f3
    if taps >= 3:
        deep = f2
    if taps >= 4:
        up = F.interpolate(f1, size=f2.shape[-2:], mode="nearest")
        deep = torch.cat([up, f2], dim=1)
    return deep, mid, shallow


class TextureRestorationModule(nn.Module):
    """Fourier-conv inpainting backbone with sketch-modulated encoder stages."""

    def __init__(self, config: SinConfig, pse_channels: tuple[int, int, int, int]):
        super().__init__()
        w = config.width_multiplier
        c64, c128, c256, c512 = (scaled_channels(c, w) for c in (64, 128, 256, 512))
        p512, p256, p128, p64 = pse_channels
        self.taps = config.taps
        deep_ch = p512 + p256 if config.taps >= 4 else (p256 if config.taps >= 3 else None)
        mid_ch = p128 if config.taps >= 2 else None
        shallow_ch = p64 if config.taps >= 1 else None

        self.stem = nn.Sequential(
            nn.Conv2d(4, c64, 7, 1, 3), nn.BatchNorm2d(c64), nn.ReLU()
        )
        embed = scaled_channels(64, w)
        self.sfa1 = SketchFeatureAggregation(c64, c128, shallow_ch, embed)
        self.sfa2 = SketchFeatureAggregation(c128, c256, mid_ch, embed)
        self.sfa3 = SketchFeatureAggregation(c256, c512, deep_ch, embed)
        self.body = nn.Sequential(
            *[FastFourierConv(c512, c512) for _ in range(config.ffc_blocks)]
        )
        self.up = nn.Sequential(
            nn.ConvTranspose2d(c512, c256, 3, 2, 1, output_padding=1),
            nn.BatchNorm2d(c256),
            nn.ReLU(),
            nn.ConvTranspose2d(c256, c128, 3, 2, 1, output_padding=1),
            nn.BatchNorm2d(c128),
            nn.ReLU(),
            nn.ConvTranspose2d(c128, c64, 3, 2, 1, output_padding=1),
            nn.BatchNorm2d(c64),
            nn.ReLU(),
        )
        self.head = nn.Sequential(nn.Conv2d(c64, 3, 7, 1, 3), nn.Tanh())

    def forward(
        self,
        masked_image: torch.Tensor,
        mask: torch.Tensor,
        pyramid: list[torch.Tensor] | None,
    ) -> torch.Tensor:
        deep, mid, shallow = pyramid_routing(pyramid, self.taps)
        x = self.stem(torch.cat([masked_image, mask], 1))
        x = self.sfa1(x, shallow)
        x = self.sfa2(x, mid)
        x = self.sfa3(x, deep)
        x = self.body(x)
        return self.head(self.up(x))


class PatchDiscriminator(nn.Module):
    """Spectral-normalized conv stack emitting an H/16 x W/16 logit map."""

    def __init__(self, width_multiplier: float = 1.0, in_channels: int = 3):
        super().__init__()
        w = width_multiplier
        chans = [scaled_channels(c, w) for c in (64, 128, 256, 512)]
        layers = []
        cin = in_channels
        for cout in chans:
            layers.append(
                nn.utils.spectral_norm(nn.Conv2d(cin, cout, 4, 2, 1))
            )
            cin = cout
        self.convs = nn.ModuleList(layers)
        self.head = nn.utils.spectral_norm(nn.Conv2d(cin, 1, 3, 1, 1))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = x
        for conv in self.convs:
            h = F.leaky_relu(conv(h), 0.2)
        return self.head(h)

    def features(self, x: torch.Tensor) -> list[torch.Tensor]:
        """Intermediate activations, used by the feature-matching loss."""
        feats = []
        h = x
        for conv in self.convs:
            h = F.leaky_relu(conv(h), 0.2)
            feats.append(h)
        return feats


class SinModel(nn.Module):
    """Generator pair: sketch encoder + restoration module."""

    def __init__(self, config: SinConfig | None = None):
        super().__init__()
        self.config = config or SinConfig()
        self.pse = PartialSketchEncoder(self.config)
        self.trm = TextureRestorationModule(self.config, self.pse.channels)

    def forward(
        self, masked_image: torch.Tensor, mask: torch.Tensor, sketch: torch.Tensor | None
    ) -> torch.Tensor:
        pyramid = self.pse(sketch, mask) if sketch is not None else None
        return self.trm(masked_image, mask, pyramid)


def inpaint(
    image: ImageTensor,
    mask: BinaryMask,
    sketch: SketchMap | None,
    sin_model: SinModel,
    srn_model: SrnModel | None = None,
    refine: bool = False,
) -> ImageTensor:
    """Full inference path; valid pixels of the output equal the input exactly."""
    if refine and srn_model is None:
        raise SketchfillError("refine=True requires a loaded refiner model")
    if mask.shape != image.data.shape[:2]:
        raise ShapeMismatchError("mask does not match image size")
    if refine and sketch is not None:
        sketch = refine_sketch(image, mask, sketch, srn_model)
    arr = image.to_unit_signed().data
    if arr.shape[2] == 1:
        arr = np.repeat(arr, 3, axis=2)
    masked = arr * (1.0 - mask.data[:, :, None])
    sin_model.eval()
    with torch.no_grad():
        pred = sin_model(
            _nchw(masked),
            _nchw(mask.data),
            _nchw(sketch.data) if sketch is not None else None,
        )
    pred_img = ImageTensor(
        np.clip(pred[0].permute(1, 2, 0).numpy(), -1.0, 1.0), "unit_signed"
    )
    return composite(pred_img, ImageTensor(arr, "unit_signed"), mask)
