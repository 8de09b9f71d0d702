"""Loss terms for the inpainting stage: reconstruction, adversarial with
gradient penalty, discriminator feature matching, and a high-receptive-field
perceptual distance."""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F


@dataclass
class SinLossWeights:
    l1: float = 10.0
    adv: float = 10.0
    fm: float = 100.0
    hrf: float = 30.0

    def __post_init__(self):
        for name in ("l1", "adv", "fm", "hrf"):
            if getattr(self, name) < 0:
                raise ValueError(f"loss weight {name} must be non-negative")


class HrfFeatureNet(nn.Module):
    """Frozen dilated conv stack used as a perceptual feature extractor.

    Defaults to deterministic random weights so perceptual distances are
    internally comparable without pretrained checkpoints; a pretrained
    backbone can be dropped in through the same interface.
    """

    def __init__(self, channels: int = 32, seed: int = 0):
        super().__init__()
        self.convs = nn.ModuleList(
            [
                nn.Conv2d(3, channels, 3, 1, 1, dilation=1),
                nn.Conv2d(channels, channels, 3, 1, 2, dilation=2),
                nn.Conv2d(channels, channels, 3, 1, 4, dilation=4),
                nn.Conv2d(channels, channels, 3, 1, 8, dilation=8),
            ]
        )
        with torch.random.fork_rng():
            torch.manual_seed(seed)
            for conv in self.convs:
                nn.init.kaiming_normal_(conv.weight)
                nn.init.zeros_(conv.bias)
        for p in self.parameters():
            p.requires_grad_(False)

    def forward(self, x: torch.Tensor) -> list[torch.Tensor]:
        feats = []
        h = x
        for conv in self.convs:
            h = F.relu(conv(h))
            feats.append(h)
        return feats


def generator_adversarial_loss(fake_logits: torch.Tensor) -> torch.Tensor:
    """Nonsaturating loss: push fake logits up."""
    return F.softplus(-fake_logits).mean()


def discriminator_adversarial_loss(
    real_logits: torch.Tensor, fake_logits: torch.Tensor
) -> torch.Tensor:
    return F.softplus(-real_logits).mean() + F.softplus(fake_logits).mean()


def gradient_penalty(
    disc: nn.Module,
    real: torch.Tensor,
    fake: torch.Tensor | None = None,
    placement: str = "real",
    target: float = 1.0,
) -> torch.Tensor:
    """mean((||grad_x D(x)||_2 - target)^2) at real samples or interpolates."""
    if placement == "real":
        x = real.detach().clone()
    elif placement == "interpolate":
        if fake is None:
            raise ValueError("interpolate placement needs fake samples")
        alpha = torch.rand(real.shape[0], 1, 1, 1, dtype=real.dtype)
        x = (alpha * real.detach() + (1 - alpha) * fake.detach()).clone()
    else:
        raise ValueError(f"unknown placement {placement!r}")
    x.requires_grad_(True)
    logits = disc(x)
    grads = torch.autograd.grad(
        logits.sum(), x, create_graph=True, retain_graph=True
    )[0]
    norms = grads.flatten(1).norm(2, dim=1)
    return ((norms - target) ** 2).mean()


def feature_matching_loss(
    real_feats: list[torch.Tensor], fake_feats: list[torch.Tensor]
) -> torch.Tensor:
    """Mean L1 across all intermediate discriminator activations."""
    total = sum(F.l1_loss(f, r.detach()) for f, r in zip(fake_feats, real_feats))
    return total / len(real_feats)


def hrf_loss(
    pred: torch.Tensor, target: torch.Tensor, net: HrfFeatureNet
) -> torch.Tensor:
    pf = net(pred)
    tf = net(target)
    total = sum(F.l1_loss(p, t) for p, t in zip(pf, tf))
    return total / len(pf)


def sin_generator_loss(
    pred: torch.Tensor,
    target: torch.Tensor,
    disc: nn.Module,
    hrf_net: HrfFeatureNet,
    weights: SinLossWeights | None = None,
) -> tuple[torch.Tensor, dict[str, float]]:
    """Weighted four-term generator objective; returns total plus a breakdown."""
    weights = weights or SinLossWeights()
    l1 = F.l1_loss(pred, target)
    fake_logits = disc(pred)
    adv = generator_adversarial_loss(fake_logits)
    fm = feature_matching_loss(disc.features(target), disc.features(pred))
    hrf = hrf_loss(pred, target, hrf_net)
    total = weights.l1 * l1 + weights.adv * adv + weights.fm * fm + weights.hrf * hrf
    terms = {
        "l1": float(l1.detach()),
        "adv": float(adv.detach()),
        "fm": float(fm.detach()),
        "hrf": float(hrf.detach()),
        "total": float(total.detach()),
    }
    return total, terms
