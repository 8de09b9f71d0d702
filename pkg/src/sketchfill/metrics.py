"""Image-quality metrics: PSNR, SSIM, distribution distance over pluggable
embeddings, inception-style sample score, and Gram-matrix style distances."""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from . import ShapeMismatchError
from .data import BinaryMask, ImageTensor

PSNR_CAP_DB = 99.0


def _to_byte_array(x) -> np.ndarray:
    if isinstance(x, ImageTensor):
        return x.to_byte().data
    return np.asarray(x, dtype=np.float64)


def psnr(a, b, peak: float = 255.0) -> float:
    """10 * log10(peak^2 / MSE); identical inputs report the 99 dB cap."""
    a = _to_byte_array(a)
    b = _to_byte_array(b)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{a.shape} vs {b.shape}")
    mse = float(np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2))
    if mse == 0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * np.log10(peak * peak / mse))


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    half = size // 2
    xs = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(xs**2) / (2 * sigma**2))
    w = np.outer(g, g)
    return w / w.sum()


def _filter2(img: np.ndarray, window: np.ndarray) -> np.ndarray:
    """Valid-mode 2-D correlation with the separately normalized window."""
    kh, kw = window.shape
    h, w = img.shape
    out = np.zeros((h - kh + 1, w - kw + 1), dtype=np.float64)
    for dy in range(kh):
        for dx in range(kw):
            out += window[dy, dx] * img[dy : dy + h - kh + 1, dx : dx + w - kw + 1]
    return out


def ssim(
    a,
    b,
    window: int = 11,
    sigma: float = 1.5,
    k1: float = 0.01,
    k2: float = 0.03,
    peak: float = 255.0,
) -> float:
    """Mean local structural similarity with a Gaussian window."""
    a = _to_byte_array(a)
    b = _to_byte_array(b)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{a.shape} vs {b.shape}")
    if a.ndim == 3:
        a = a.mean(axis=2)
        b = b.mean(axis=2)
    if min(a.shape) < window:
        raise ValueError(f"image {a.shape} smaller than SSIM window {window}")
    win = _gaussian_window(window, sigma)
    c1 = (k1 * peak) ** 2
    c2 = (k2 * peak) ** 2
    mu_a = _filter2(a, win)
    mu_b = _filter2(b, win)
    var_a = _filter2(a * a, win) - mu_a**2
    var_b = _filter2(b * b, win) - mu_b**2
    cov = _filter2(a * b, win) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def fid(embeddings_a: np.ndarray, embeddings_b: np.ndarray) -> float:
    """Frechet distance between Gaussian fits of two embedding sets.

    The trace cross-term uses the eigenvalues of Sigma_a @ Sigma_b with
    negative values (numerical noise) clipped to zero.
    """
    a = np.asarray(embeddings_a, dtype=np.float64)
    b = np.asarray(embeddings_b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ShapeMismatchError(f"embedding sets {a.shape} vs {b.shape}")
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise ValueError("each embedding set needs at least 2 samples")
    mu_a, mu_b = a.mean(axis=0), b.mean(axis=0)
    cov_a = np.cov(a, rowvar=False)
    cov_b = np.cov(b, rowvar=False)
    cov_a = np.atleast_2d(cov_a)
    cov_b = np.atleast_2d(cov_b)
    diff = float(((mu_a - mu_b) ** 2).sum())
    eigvals = np.linalg.eigvals(cov_a @ cov_b)
    sqrt_trace = np.sqrt(np.clip(eigvals.real, 0.0, None)).sum()
    value = diff + np.trace(cov_a) + np.trace(cov_b) - 2.0 * sqrt_trace
    return float(max(value, 0.0))


def inception_score(probabilities: np.ndarray) -> float:
    """exp(mean KL(p(y|x) || p(y))) over per-sample class distributions."""
    p = np.asarray(probabilities, dtype=np.float64)
    if p.ndim != 2:
        raise ValueError("expected (num_samples, num_classes) probabilities")
    sums = p.sum(axis=1, keepdims=True)
    if not np.allclose(sums, 1.0, atol=1e-6):
        import warnings

        warnings.warn("classifier outputs not on the simplex; renormalizing")
        p = p / sums
    marginal = p.mean(axis=0, keepdims=True)
    eps = 1e-12
    kl = (p * (np.log(p + eps) - np.log(marginal + eps))).sum(axis=1)
    return float(np.exp(kl.mean()))


class RandomFeatureEmbedder(nn.Module):
    """Frozen random convnet; stands in for a pretrained embedding/classifier.

    Scores computed with it are internally comparable across runs of this
    repo but not comparable to published numbers.
    """

    def __init__(self, out_dim: int = 64, seed: int = 0, classify: bool = False):
        super().__init__()
        self.classify = classify
        with torch.random.fork_rng():
            torch.manual_seed(seed)
            self.net = nn.Sequential(
                nn.Conv2d(3, 16, 3, 2, 1),
                nn.ReLU(),
                nn.Conv2d(16, 32, 3, 2, 1),
                nn.ReLU(),
                nn.Conv2d(32, 64, 3, 2, 1),
                nn.ReLU(),
                nn.AdaptiveAvgPool2d(1),
                nn.Flatten(),
                nn.Linear(64, out_dim),
            )
        for p in self.parameters():
            p.requires_grad_(False)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        out = self.net(images)
        if self.classify:
            out = torch.softmax(out, dim=1)
        return out

    def embed_images(self, images: list[ImageTensor]) -> np.ndarray:
        batch = torch.cat(
            [
                torch.from_numpy(
                    np.repeat(im.to_unit_signed().data, 3 // im.channels, axis=2)
                    if im.channels == 1
                    else im.to_unit_signed().data
                )
                .permute(2, 0, 1)
                .unsqueeze(0)
                for im in images
            ]
        )
        with torch.no_grad():
            return self(batch).numpy()


class TwoStageFeatureExtractor(nn.Module):
    """Frozen extractor exposing two named feature stages for style distances."""

    def __init__(self, channels: tuple[int, int] = (16, 32), seed: int = 0):
        super().__init__()
        with torch.random.fork_rng():
            torch.manual_seed(seed)
            self.stage1 = nn.Sequential(nn.Conv2d(3, channels[0], 3, 1, 1), nn.ReLU())
            self.stage2 = nn.Sequential(
                nn.Conv2d(channels[0], channels[1], 3, 2, 1), nn.ReLU()
            )
        for p in self.parameters():
            p.requires_grad_(False)

    def forward(self, x: torch.Tensor) -> dict[str, torch.Tensor]:
        f1 = self.stage1(x)
        f2 = self.stage2(f1)
        return {"stage1": f1, "stage2": f2}


def gram_matrix(features: torch.Tensor) -> torch.Tensor:
    """(C x C) Gram of an (N, C, H, W) feature map, normalized by C*H*W."""
    n, c, h, w = features.shape
    flat = features.reshape(n, c, h * w)
    return flat @ flat.transpose(1, 2) / (c * h * w)


def style_loss(a, b, extractor: TwoStageFeatureExtractor | None = None) -> tuple[float, float]:
    """L1 Gram distances at the extractor's two stages, feature-count normalized."""
    extractor = extractor or TwoStageFeatureExtractor()

    def prep(x):
        arr = _to_byte_array(x) / 127.5 - 1.0
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.shape[2] == 1:
            arr = np.repeat(arr, 3, axis=2)
        return torch.from_numpy(arr.astype(np.float32)).permute(2, 0, 1).unsqueeze(0)

    with torch.no_grad():
        fa = extractor(prep(a))
        fb = extractor(prep(b))
    out = []
    for stage in ("stage1", "stage2"):
        ga = gram_matrix(fa[stage])
        gb = gram_matrix(fb[stage])
        out.append(float((ga - gb).abs().mean()))
    return out[0], out[1]
