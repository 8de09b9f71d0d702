"""Shared network building blocks: gated convolution, residual block,
fast Fourier convolution, and sketch-feature modulation."""

from __future__ import annotations

import torch
import torch.nn as nn
import torch.nn.functional as F


def make_activation(name: str | None) -> nn.Module:
    table = {
        "relu": nn.ReLU(),
        "leaky_relu": nn.LeakyReLU(0.2),
        "tanh": nn.Tanh(),
        "sigmoid": nn.Sigmoid(),
        None: nn.Identity(),
        "none": nn.Identity(),
    }
    if name not in table:
        raise ValueError(f"unknown activation {name!r}")
    return table[name]


def make_norm(name: str | None, channels: int) -> nn.Module:
    if name in (None, "none"):
        return nn.Identity()
    if name == "instance":
        return nn.InstanceNorm2d(channels)
    if name == "batch":
        return nn.BatchNorm2d(channels)
    raise ValueError(f"unknown norm {name!r}")


class GatedConv2d(nn.Module):
    """Two sibling convolutions; the sigmoid of one gates the other.

    out = act(norm(conv_f(x))) * sigmoid(conv_g(x))
    """

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int = 3,
        stride: int = 1,
        padding: int | None = None,
        activation: str | None = "leaky_relu",
        norm: str | None = None,
    ):
        super().__init__()
        if padding is None:
            padding = kernel_size // 2
        self.feature = nn.Conv2d(in_channels, out_channels, kernel_size, stride, padding)
        self.gate = nn.Conv2d(in_channels, out_channels, kernel_size, stride, padding)
        self.norm = make_norm(norm, out_channels)
        self.act = make_activation(activation)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.act(self.norm(self.feature(x))) * torch.sigmoid(self.gate(x))


class ResidualConvBlock(nn.Module):
    """x + conv2(act(conv1(x))); optional spectral and batch normalization."""

    def __init__(
        self,
        channels: int,
        kernel_size: int = 3,
        activation: str = "relu",
        batch_norm: bool = False,
        spectral: bool = False,
    ):
        super().__init__()
        pad = kernel_size // 2
        conv1 = nn.Conv2d(channels, channels, kernel_size, 1, pad)
        conv2 = nn.Conv2d(channels, channels, kernel_size, 1, pad)
        if spectral:
            conv1 = nn.utils.spectral_norm(conv1)
            conv2 = nn.utils.spectral_norm(conv2)
        self.conv1 = conv1
        self.conv2 = conv2
        self.norm1 = nn.BatchNorm2d(channels) if batch_norm else nn.Identity()
        self.act = make_activation(activation)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.conv2(self.act(self.norm1(self.conv1(x))))


class SpectralUnit(nn.Module):
    """Real 2-D FFT -> 1x1 convolution over stacked (real, imag) -> inverse FFT."""

    def __init__(self, channels: int):
        super().__init__()
        self.conv = nn.Conv2d(2 * channels, 2 * channels, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, c, h, w = x.shape
        spec = torch.fft.rfft2(x, dim=(-2, -1))
        stacked = torch.cat([spec.real, spec.imag], dim=1)
        mixed = self.conv(stacked)
        out = torch.complex(mixed[:, :c], mixed[:, c:])
        return torch.fft.irfft2(out, s=(h, w), dim=(-2, -1))


class FastFourierConv(nn.Module):
    """Convolution with a local spatial branch and a global spectral branch.

    Channels split in half: the local half goes through a 3x3 convolution,
    the global half through the spectral unit; cross connections exchange
    information between the halves before norm + activation.
    """

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int = 3,
        activation: str | None = "relu",
        norm: str | None = "batch",
    ):
        super().__init__()
        if in_channels % 2 or out_channels % 2:
            raise ValueError("FFC needs even channel counts for the 50/50 split")
        li, gi = in_channels // 2, in_channels // 2
        lo, go = out_channels // 2, out_channels // 2
        pad = kernel_size // 2
        self.local_in = li
        self.conv_ll = nn.Conv2d(li, lo, kernel_size, 1, pad)
        self.conv_lg = nn.Conv2d(li, go, kernel_size, 1, pad)
        self.conv_gl = nn.Conv2d(gi, lo, kernel_size, 1, pad)
        self.spectral = SpectralUnit(gi)
        self.proj_gg = nn.Conv2d(gi, go, 1) if gi != go else nn.Identity()
        self.norm = make_norm(norm, out_channels)
        self.act = make_activation(activation)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[-1] % 2 or x.shape[-2] % 2:
            raise ValueError("FFC requires even spatial dimensions")
        xl, xg = x[:, : self.local_in], x[:, self.local_in :]
        yl = self.conv_ll(xl) + self.conv_gl(xg)
        yg = self.conv_lg(xl) + self.proj_gg(self.spectral(xg))
        return self.act(self.norm(torch.cat([yl, yg], dim=1)))


class SketchFeatureAggregation(nn.Module):
    """Stride-2 encoder convolution modulated by sketch features.

    The sketch features are projected through a shared embedding convolution,
    then two sibling convolutions emit per-pixel gamma/beta maps applied to
    the normalized image features: act(bn(conv_down(x)) * (1 + gamma) + beta).
    Modulation convolutions are zero-initialized, so an untouched block (or a
    missing sketch feature) behaves exactly like a plain conv + norm + act.
    """

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        sketch_channels: int | None,
        embed_channels: int = 64,
        kernel_size: int = 3,
        stride: int = 2,
        activation: str = "relu",
    ):
        super().__init__()
        pad = kernel_size // 2
        self.conv_down = nn.Conv2d(in_channels, out_channels, kernel_size, stride, pad)
        self.bn = nn.BatchNorm2d(out_channels, affine=False)
        self.act = make_activation(activation)
        self.sketch_channels = sketch_channels
        if sketch_channels is not None:
            self.embed = nn.Conv2d(sketch_channels, embed_channels, 3, 1, 1)
            self.conv_gamma = nn.Conv2d(embed_channels, out_channels, 3, 1, 1)
            self.conv_beta = nn.Conv2d(embed_channels, out_channels, 3, 1, 1)
            nn.init.zeros_(self.conv_gamma.weight)
            nn.init.zeros_(self.conv_gamma.bias)
            nn.init.zeros_(self.conv_beta.weight)
            nn.init.zeros_(self.conv_beta.bias)

    def forward(self, x: torch.Tensor, f: torch.Tensor | None = None) -> torch.Tensor:
        n = self.bn(self.conv_down(x))
        if f is None or self.sketch_channels is None:
            return self.act(n)
        if f.shape[-2:] != n.shape[-2:]:
            f = F.interpolate(f, size=n.shape[-2:], mode="nearest")
        e = F.relu(self.embed(f))
        gamma = self.conv_gamma(e)
        beta = self.conv_beta(e)
        return self.act(n * (1.0 + gamma) + beta)


def scaled_channels(base: int, width_multiplier: float) -> int:
    """Scale a table channel count, keeping it even (FFC split, pyramid math)."""
    c = max(2, int(round(base * width_multiplier)))
    return c + (c % 2)
