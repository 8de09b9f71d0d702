"""Region-level cross-correlation loss for sketch refinement.

Local means are box averages over an n x n sliding grid. For every center
pixel p, difference maps are built against the n x n neighborhood of window
centers p_i, and a normalized correlation of the two difference maps is
accumulated with a negative sign (higher correlation = lower loss).

Border convention: the local-mean map is computed with zero padding; the
center set only covers pixels whose whole neighborhood of windows lies
inside the map (a margin of 2 * (n // 2)), which keeps the loss invariant
to adding a global constant to both inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F

from . import ShapeMismatchError

AS_WRITTEN = "as_written"
SQUARED_DENOMINATOR = "squared_denominator"


@dataclass
class CcLossConfig:
    grid_size: int = 9
    epsilon: float = 1e-6
    variant: str = AS_WRITTEN

    def __post_init__(self):
        if self.grid_size % 2 == 0 or self.grid_size < 3:
            raise ValueError("grid_size must be odd and >= 3")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.variant not in (AS_WRITTEN, SQUARED_DENOMINATOR):
            raise ValueError(f"unknown variant {self.variant!r}")


def local_means(a: torch.Tensor, n: int) -> torch.Tensor:
    """Box mean over an n x n window, same-padded with zeros."""
    if n % 2 == 0:
        raise ValueError(f"window size must be odd, got {n}")
    squeeze = a.dim() == 2
    if squeeze:
        a = a.unsqueeze(0).unsqueeze(0)
    elif a.dim() == 3:
        a = a.unsqueeze(1)
        squeeze = False
    kernel = torch.ones(1, 1, n, n, dtype=a.dtype, device=a.device) / (n * n)
    out = F.conv2d(a, kernel, padding=n // 2)
    return out[0, 0] if squeeze else out


def _shifted(m: torch.Tensor, dy: int, dx: int) -> torch.Tensor:
    """Zero-padded shift: value of m at (y+dy, x+dx), 0 outside the map."""
    h, w = m.shape[-2:]
    pad = max(abs(dy), abs(dx))
    p = F.pad(m, (pad, pad, pad, pad))
    return p[..., pad + dy : pad + dy + h, pad + dx : pad + dx + w]


def cc_loss(s_hat: torch.Tensor, edge: torch.Tensor, config: CcLossConfig) -> torch.Tensor:
    """Negative windowed cross-correlation between two single-channel maps."""
    if s_hat.shape != edge.shape:
        raise ShapeMismatchError(f"{tuple(s_hat.shape)} vs {tuple(edge.shape)}")
    n = config.grid_size
    ms = local_means(s_hat, n)
    me = local_means(edge, n)
    r = n // 2

    num = torch.zeros_like(ms)
    den_s = torch.zeros_like(ms)
    den_e = torch.zeros_like(ms)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            ds = (_shifted(ms, dy, dx) - ms).abs()
            de = (_shifted(me, dy, dx) - me).abs()
            num = num + ds * de
            if config.variant == SQUARED_DENOMINATOR:
                den_s = den_s + ds * ds
                den_e = den_e + de * de
            else:
                den_s = den_s + ds
                den_e = den_e + de
    per_pixel = num.pow(2) / (den_s * den_e + config.epsilon)
    h, w = per_pixel.shape[-2:]
    margin = 2 * r
    if h <= 2 * margin or w <= 2 * margin:
        return s_hat.sum() * 0.0
    interior = per_pixel[..., margin : h - margin, margin : w - margin]
    return -interior.sum()


def srn_losses(
    s_coarse: torch.Tensor,
    s_hat: torch.Tensor,
    edge: torch.Tensor,
    lambda1: float = 0.4,
    lambda2: float = 0.9,
    config: CcLossConfig | None = None,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Stage losses: mean absolute error plus weighted cross-correlation.

    The registration output is compared against the edge with weight lambda1,
    the enhanced output with weight lambda2.
    """
    if lambda1 < 0 or lambda2 < 0:
        raise ValueError("loss weights must be non-negative")
    config = config or CcLossConfig()
    loss_rm = F.l1_loss(s_coarse, edge) + lambda1 * cc_loss(s_coarse, edge, config)
    loss_em = F.l1_loss(s_hat, edge) + lambda2 * cc_loss(s_hat, edge, config)
    return loss_rm, loss_em
