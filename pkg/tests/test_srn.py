import numpy as np
import pytest
import torch

from sketchfill import ShapeMismatchError
from sketchfill.data import BinaryMask, SketchMap
from sketchfill.masks import generate_freeform_mask
from sketchfill.srn import EnhancementModule, RegistrationModule, SrnModel, refine_sketch
from sketchfill.ssa import SsaConfig, detect_edges, simulate_sketch

from conftest import make_toy_image


def test_rm_output_shape_and_range():
    rm = RegistrationModule(width_multiplier=0.25)
    x = torch.randn(2, 5, 64, 64)
    out = rm(x)
    assert out.shape == (2, 1, 64, 64)
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_rm_zero_weights_constant_half():
    rm = RegistrationModule(width_multiplier=0.25)
    with torch.no_grad():
        for p in rm.parameters():
            p.zero_()
        # open the head gate so the sigmoid-of-zero feature (0.5) passes
        rm.head.gate.bias.fill_(50.0)
    out = rm(torch.randn(1, 5, 32, 32))
    torch.testing.assert_close(out, torch.full_like(out, 0.5))


def test_em_output_shape_and_range():
    em = EnhancementModule(width_multiplier=0.25)
    out = em(torch.rand(1, 1, 64, 64))
    assert out.shape == (1, 1, 64, 64)
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_em_zero_weights_constant_half():
    em = EnhancementModule(width_multiplier=0.25)
    with torch.no_grad():
        for p in em.parameters():
            p.zero_()
    out = em(torch.rand(1, 1, 32, 32))
    torch.testing.assert_close(out, torch.full_like(out, 0.5))


def test_model_forward_pair():
    model = SrnModel(width_multiplier=0.25)
    s_coarse, s_hat = model(torch.randn(1, 3, 64, 64), torch.rand(1, 1, 64, 64), torch.rand(1, 1, 64, 64))
    assert s_coarse.shape == (1, 1, 64, 64)
    assert s_hat.shape == (1, 1, 64, 64)


def test_forward_deterministic_in_eval():
    model = SrnModel(width_multiplier=0.25)
    model.eval()
    img = torch.randn(1, 3, 64, 64)
    mask = torch.rand(1, 1, 64, 64)
    sketch = (torch.rand(1, 1, 64, 64) > 0.5).float()
    with torch.no_grad():
        a = model(img, mask, sketch)
        b = model(img, mask, sketch)
    torch.testing.assert_close(a[1], b[1])


def test_gradients_reach_both_modules():
    model = SrnModel(width_multiplier=0.25)
    s_coarse, s_hat = model(torch.randn(1, 3, 32, 32), torch.rand(1, 1, 32, 32), torch.rand(1, 1, 32, 32))
    (s_coarse.mean() + s_hat.mean()).backward()
    assert model.rm.enc1.feature.weight.grad is not None
    assert model.em.head.weight.grad is not None


def test_refine_sketch_binary_output():
    model = SrnModel(width_multiplier=0.25)
    img = make_toy_image(0)
    mask = generate_freeform_mask(64, 64, seed=0)
    sketch, _, _ = simulate_sketch(img, mask, SsaConfig(), seed=1)
    out = refine_sketch(img, mask, sketch, model)
    assert out.data.shape == (64, 64)
    assert set(np.unique(out.data)) <= {0.0, 1.0}


def test_refine_sketch_empty_mask_all_zero():
    model = SrnModel(width_multiplier=0.25)
    img = make_toy_image(1)
    mask = BinaryMask(np.zeros((64, 64), dtype=np.float32))
    sketch = detect_edges(img)
    out = refine_sketch(img, mask, sketch, model)
    assert out.data.sum() == 0


def test_refine_sketch_retain_valid_keeps_background():
    model = SrnModel(width_multiplier=0.25)
    img = make_toy_image(1)
    mask = BinaryMask(np.zeros((64, 64), dtype=np.float32))
    sketch = detect_edges(img)
    out = refine_sketch(img, mask, sketch, model, retain_valid=True)
    masked = refine_sketch(img, mask, sketch, model)
    # full-frame result can carry strokes the mask-retained one drops
    assert out.data.sum() >= masked.data.sum()


def test_refine_sketch_shape_mismatch():
    model = SrnModel(width_multiplier=0.25)
    img = make_toy_image(0, 64)
    mask = BinaryMask(np.zeros((32, 32), dtype=np.float32))
    sketch = SketchMap(np.zeros((64, 64), dtype=np.float32))
    with pytest.raises(ShapeMismatchError):
        refine_sketch(img, mask, sketch, model)


def test_width_multiplier_shrinks_parameters():
    full = sum(p.numel() for p in SrnModel(1.0).parameters())
    quarter = sum(p.numel() for p in SrnModel(0.25).parameters())
    assert quarter < full / 8
