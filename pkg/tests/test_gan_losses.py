import math

import pytest
import torch
import torch.nn as nn

from sketchfill.gan_losses import (
    HrfFeatureNet,
    SinLossWeights,
    discriminator_adversarial_loss,
    feature_matching_loss,
    generator_adversarial_loss,
    gradient_penalty,
    hrf_loss,
    sin_generator_loss,
)
from sketchfill.sin import PatchDiscriminator


class LinearDisc(nn.Module):
    """D(x) = <w, x>; its input gradient is w everywhere."""

    def __init__(self, shape):
        super().__init__()
        self.w = nn.Parameter(torch.randn(*shape))

    def forward(self, x):
        return (x * self.w).flatten(1).sum(1)


def test_weights_validation():
    with pytest.raises(ValueError):
        SinLossWeights(fm=-1.0)
    w = SinLossWeights()
    assert (w.l1, w.adv, w.fm, w.hrf) == (10.0, 10.0, 100.0, 30.0)


def test_generator_loss_softplus_values():
    logits = torch.tensor([0.0])
    assert generator_adversarial_loss(logits).item() == pytest.approx(math.log(2.0))
    big = torch.tensor([50.0])
    assert generator_adversarial_loss(big).item() == pytest.approx(0.0, abs=1e-6)


def test_discriminator_loss_softplus_values():
    zero = torch.tensor([0.0])
    assert discriminator_adversarial_loss(zero, zero).item() == pytest.approx(2 * math.log(2.0))
    # confident correct discriminator drives the loss to zero
    good = discriminator_adversarial_loss(torch.tensor([50.0]), torch.tensor([-50.0]))
    assert good.item() == pytest.approx(0.0, abs=1e-6)


def test_gradient_penalty_closed_form_linear_disc():
    torch.manual_seed(0)
    disc = LinearDisc((3, 8, 8))
    real = torch.randn(4, 3, 8, 8)
    gp = gradient_penalty(disc, real)
    expected = (disc.w.norm().item() - 1.0) ** 2
    assert gp.item() == pytest.approx(expected, abs=1e-5)


def test_gradient_penalty_custom_target():
    torch.manual_seed(1)
    disc = LinearDisc((3, 8, 8))
    real = torch.randn(2, 3, 8, 8)
    gp = gradient_penalty(disc, real, target=0.0)
    assert gp.item() == pytest.approx(disc.w.norm().item() ** 2, abs=1e-4)


def test_gradient_penalty_interpolate_placement():
    torch.manual_seed(2)
    disc = LinearDisc((3, 8, 8))
    real = torch.randn(2, 3, 8, 8)
    fake = torch.randn(2, 3, 8, 8)
    gp = gradient_penalty(disc, real, fake, placement="interpolate")
    # linear disc: gradient is w regardless of the interpolation point
    assert gp.item() == pytest.approx((disc.w.norm().item() - 1.0) ** 2, abs=1e-5)
    with pytest.raises(ValueError, match="interpolate"):
        gradient_penalty(disc, real, None, placement="interpolate")
    with pytest.raises(ValueError, match="placement"):
        gradient_penalty(disc, real, placement="midpoint")


def test_gradient_penalty_parameter_gradient_finite_difference():
    torch.manual_seed(3)
    disc = LinearDisc((2, 4, 4))
    real = torch.randn(2, 2, 4, 4)
    gp = gradient_penalty(disc, real)
    gp.backward()
    eps = 1e-4
    idx = (0, 1, 2)
    orig = disc.w.data[idx].item()
    disc.w.data[idx] = orig + eps
    up = gradient_penalty(disc, real).item()
    disc.w.data[idx] = orig - eps
    down = gradient_penalty(disc, real).item()
    disc.w.data[idx] = orig
    fd = (up - down) / (2 * eps)
    grad = disc.w.grad[idx].item()
    assert abs(grad - fd) / max(abs(fd), abs(grad), 1e-4) < 1e-2


def test_gradient_penalty_on_patch_discriminator():
    disc = PatchDiscriminator(width_multiplier=0.125)
    gp = gradient_penalty(disc, torch.randn(2, 3, 32, 32))
    assert torch.isfinite(gp) and gp.item() >= 0


def test_feature_matching_zero_for_identical_inputs():
    disc = PatchDiscriminator(width_multiplier=0.125)
    x = torch.randn(1, 3, 32, 32)
    feats = disc.features(x)
    assert feature_matching_loss(feats, feats).item() == 0.0
    assert feature_matching_loss(feats, disc.features(x + 0.5)).item() > 0


def test_hrf_net_frozen_and_deterministic():
    a = HrfFeatureNet(seed=7)
    b = HrfFeatureNet(seed=7)
    for pa, pb in zip(a.parameters(), b.parameters()):
        torch.testing.assert_close(pa, pb)
        assert not pa.requires_grad
    c = HrfFeatureNet(seed=8)
    assert not torch.allclose(next(a.parameters()), next(c.parameters()))


def test_hrf_loss_zero_on_identity():
    net = HrfFeatureNet()
    x = torch.randn(1, 3, 32, 32)
    assert hrf_loss(x, x, net).item() == 0.0
    assert hrf_loss(x, x + 0.3, net).item() > 0


def test_hrf_receptive_field_is_wide():
    # dilations 1+2+4+8 give a 15-pixel radius; a 14-pixel-away perturbation
    # registers in the last feature map
    net = HrfFeatureNet()
    x = torch.zeros(1, 3, 32, 32)
    x2 = x.clone()
    x2[0, :, 0, 0] = 1.0
    feats_a = net(x)
    feats_b = net(x2)
    assert (feats_a[-1] - feats_b[-1]).abs()[0, :, 14, 14].sum() > 0


def test_sin_generator_loss_breakdown():
    torch.manual_seed(4)
    disc = PatchDiscriminator(width_multiplier=0.125)
    hrf_net = HrfFeatureNet()
    pred = torch.rand(1, 3, 32, 32, requires_grad=True)
    target = torch.rand(1, 3, 32, 32)
    weights = SinLossWeights(l1=1.0, adv=2.0, fm=3.0, hrf=4.0)
    total, terms = sin_generator_loss(pred, target, disc, hrf_net, weights)
    recon = (
        1.0 * terms["l1"] + 2.0 * terms["adv"] + 3.0 * terms["fm"] + 4.0 * terms["hrf"]
    )
    assert terms["total"] == pytest.approx(recon, rel=1e-5)
    total.backward()
    assert pred.grad is not None and torch.isfinite(pred.grad).all()
