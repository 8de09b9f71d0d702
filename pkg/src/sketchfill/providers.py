"""Pluggable edge and foreground (saliency) providers.

Built-in edge detection is a classical pipeline: Sobel gradients,
non-maximum suppression along the gradient direction, then hysteresis
thresholding. The "precomputed" providers read sidecar PNGs next to the
source image (<image>.edge.png / <image>.fg.png), which keeps learned
detectors pluggable without vendoring weights.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import SketchfillError
from .data import BinaryMask, EdgeMap, ImageTensor, binarize, load_mask

EDGE_SIDECAR_SUFFIX = ".edge.png"
FG_SIDECAR_SUFFIX = ".fg.png"


def _to_gray(image: ImageTensor) -> np.ndarray:
    arr = image.to_unit_signed().data
    gray = arr.mean(axis=2) if arr.shape[2] == 3 else arr[:, :, 0]
    return (gray + 1.0) / 2.0


def sobel_gradients(gray: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """3x3 Sobel responses (gx, gy) with edge-replicated borders."""
    padded = np.pad(gray, 1, mode="edge")
    kx = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float32)
    ky = kx.T
    h, w = gray.shape
    gx = np.zeros_like(gray)
    gy = np.zeros_like(gray)
    for dy in range(3):
        for dx in range(3):
            window = padded[dy : dy + h, dx : dx + w]
            gx += kx[dy, dx] * window
            gy += ky[dy, dx] * window
    return gx, gy


def _nms(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Thin ridges to one pixel; ties broken toward the gradient direction."""
    h, w = mag.shape
    padded = np.pad(mag, 1, mode="constant")
    angle = np.arctan2(gy, gx)
    # quantize direction to 4 bins: 0, 45, 90, 135 degrees
    sector = np.round(angle / (np.pi / 4)).astype(int) % 4
    offsets = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}
    keep = np.zeros_like(mag, dtype=bool)
    ys, xs = np.mgrid[0:h, 0:w]
    for s, (dy, dx) in offsets.items():
        sel = sector == s
        fwd = padded[ys + 1 + dy, xs + 1 + dx]
        bwd = padded[ys + 1 - dy, xs + 1 - dx]
        keep |= sel & (mag > fwd) & (mag >= bwd)
    return keep


def _hysteresis(strong: np.ndarray, weak: np.ndarray) -> np.ndarray:
    """Grow strong edges through connected weak pixels (8-connectivity)."""
    result = strong.copy()
    frontier = list(zip(*np.nonzero(strong)))
    h, w = strong.shape
    while frontier:
        y, x = frontier.pop()
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                ny, nx = y + dy, x + dx
                if 0 <= ny < h and 0 <= nx < w and weak[ny, nx] and not result[ny, nx]:
                    result[ny, nx] = True
                    frontier.append((ny, nx))
    return result


def sobel_edges(
    image: ImageTensor, low: float = 0.1, high: float = 0.2
) -> EdgeMap:
    """Built-in edge detector; thresholds are fractions of the peak magnitude."""
    gray = _to_gray(image)
    gx, gy = sobel_gradients(gray)
    mag = np.hypot(gx, gy)
    peak = mag.max()
    if peak <= 0:
        return EdgeMap(np.zeros_like(gray))
    thinned = _nms(mag, gx, gy)
    strong = thinned & (mag >= high * peak)
    weak = thinned & (mag >= low * peak)
    edges = _hysteresis(strong, weak)
    return EdgeMap(edges.astype(np.float32))


class EdgeProvider:
    """Maps an image (plus optional source path) to a binary edge map."""

    def __call__(self, image: ImageTensor, source_path: str | None = None) -> EdgeMap:
        raise NotImplementedError


class SobelEdgeProvider(EdgeProvider):
    def __init__(self, low: float = 0.1, high: float = 0.2):
        self.low = low
        self.high = high

    def __call__(self, image: ImageTensor, source_path: str | None = None) -> EdgeMap:
        return sobel_edges(image, self.low, self.high)


class SidecarEdgeProvider(EdgeProvider):
    """Load a precomputed edge map stored next to the source image."""

    def __call__(self, image: ImageTensor, source_path: str | None = None) -> EdgeMap:
        if source_path is None:
            raise SketchfillError("precomputed edge provider needs a source path")
        sidecar = Path(str(source_path) + EDGE_SIDECAR_SUFFIX)
        if not sidecar.exists():
            raise SketchfillError(f"edge sidecar not found: {sidecar}")
        return load_mask(sidecar)


class ForegroundProvider:
    """Maps an image to a {0,1} foreground (salient region) mask."""

    def __call__(self, image: ImageTensor, source_path: str | None = None) -> BinaryMask:
        raise NotImplementedError


class FullFrameForegroundProvider(ForegroundProvider):
    """All-ones stub: degrades sketch simulation to whole-image edges."""

    def __call__(self, image: ImageTensor, source_path: str | None = None) -> BinaryMask:
        return BinaryMask(np.ones(image.data.shape[:2], dtype=np.float32))


class SidecarForegroundProvider(ForegroundProvider):
    def __call__(self, image: ImageTensor, source_path: str | None = None) -> BinaryMask:
        if source_path is None:
            raise SketchfillError("precomputed foreground provider needs a source path")
        sidecar = Path(str(source_path) + FG_SIDECAR_SUFFIX)
        if not sidecar.exists():
            raise SketchfillError(f"foreground sidecar not found: {sidecar}")
        return load_mask(sidecar)


_EDGE_PROVIDERS = {
    "sobel": SobelEdgeProvider,
    "precomputed": SidecarEdgeProvider,
}
_FG_PROVIDERS = {
    "full": FullFrameForegroundProvider,
    "precomputed": SidecarForegroundProvider,
}


def get_edge_provider(name: str) -> EdgeProvider:
    if name not in _EDGE_PROVIDERS:
        raise SketchfillError(
            f"unknown edge provider {name!r}; available: {sorted(_EDGE_PROVIDERS)}"
        )
    return _EDGE_PROVIDERS[name]()


def get_foreground_provider(name: str) -> ForegroundProvider:
    if name not in _FG_PROVIDERS:
        raise SketchfillError(
            f"unknown foreground provider {name!r}; available: {sorted(_FG_PROVIDERS)}"
        )
    return _FG_PROVIDERS[name]()
