"""Image, mask, and sketch containers plus the I/O shared by every pipeline stage.

Conventions:
  - images are H x W x C float32 arrays; internally in [-1, 1] ("unit_signed"),
    [0, 255] ("byte") only at file boundaries
  - masks/sketches are H x W float32 arrays holding strictly {0, 1};
    1 marks the corrupted (hole) region of a mask
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import ShapeMismatchError, SketchfillError

UNIT_SIGNED = "unit_signed"
BYTE = "byte"


def _check_size(h: int, w: int) -> None:
    if h < 16 or w < 16 or h % 8 != 0 or w % 8 != 0:
        raise SketchfillError(
            f"image size {h}x{w} invalid: sides must be >= 16 and divisible by 8"
        )


@dataclass
class ImageTensor:
    """H x W x C float image with an explicit value-range tag."""

    data: np.ndarray
    range_tag: str = UNIT_SIGNED

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.ndim == 2:
            self.data = self.data[:, :, None]
        if self.data.ndim != 3 or self.data.shape[2] not in (1, 3):
            raise SketchfillError(f"expected HxWxC with C in {{1,3}}, got {self.data.shape}")
        _check_size(*self.data.shape[:2])
        lo, hi = (-1.0, 1.0) if self.range_tag == UNIT_SIGNED else (0.0, 255.0)
        if self.data.min() < lo - 1e-4 or self.data.max() > hi + 1e-4:
            raise SketchfillError(
                f"values outside declared range {self.range_tag}: "
                f"[{self.data.min():.3f}, {self.data.max():.3f}]"
            )

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def to_unit_signed(self) -> "ImageTensor":
        if self.range_tag == UNIT_SIGNED:
            return self
        return ImageTensor(self.data / 127.5 - 1.0, UNIT_SIGNED)

    def to_byte(self) -> "ImageTensor":
        if self.range_tag == BYTE:
            return self
        return ImageTensor(np.clip((self.data + 1.0) * 127.5, 0, 255), BYTE)


@dataclass
class BinaryMask:
    """H x W map in {0, 1}; 1 marks the hole."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.ndim != 2:
            raise SketchfillError(f"mask must be HxW, got {self.data.shape}")
        if not np.isin(self.data, (0.0, 1.0)).all():
            raise SketchfillError("mask values must be strictly 0 or 1")

    @property
    def shape(self):
        return self.data.shape

    def ratio(self) -> float:
        return float(self.data.mean())

    def inverted(self) -> "BinaryMask":
        return BinaryMask(1.0 - self.data)


# Sketches and edges share the binary-map contract; the aliases keep call
# sites readable.
SketchMap = BinaryMask
EdgeMap = BinaryMask


@dataclass
class TrainingSample:
    image: ImageTensor
    mask: BinaryMask
    sketch: SketchMap
    edge: EdgeMap
    foreground_edge: EdgeMap

    def __post_init__(self):
        hw = self.image.data.shape[:2]
        for name in ("mask", "sketch", "edge", "foreground_edge"):
            if getattr(self, name).shape != hw:
                raise ShapeMismatchError(f"{name} shape differs from image {hw}")


def load_image(path: str | os.PathLike, target_size: int | None = None) -> ImageTensor:
    """Load a PNG/JPEG, optionally resize bilinearly, return unit-signed HxWxC."""
    path = Path(path)
    if not path.exists():
        raise SketchfillError(f"image file not found: {path}")
    try:
        img = Image.open(path)
        img.load()
    except Exception as exc:
        raise SketchfillError(f"cannot decode image {path}: {exc}") from exc
    if img.mode not in ("L", "RGB"):
        img = img.convert("RGB")
    if target_size is not None:
        _check_size(target_size, target_size)
        if img.size != (target_size, target_size):
            img = img.resize((target_size, target_size), Image.BILINEAR)
    arr = np.asarray(img, dtype=np.float32)
    _check_size(*arr.shape[:2])
    return ImageTensor(arr, BYTE).to_unit_signed()


def save_image(image: ImageTensor, path: str | os.PathLike) -> None:
    byte = image.to_byte().data
    arr = np.round(byte).astype(np.uint8)
    if arr.shape[2] == 1:
        arr = arr[:, :, 0]
    Image.fromarray(arr).save(path)


def load_mask(path: str | os.PathLike) -> BinaryMask:
    """Read a single-channel {0,255} PNG into a {0,1} mask."""
    path = Path(path)
    if not path.exists():
        raise SketchfillError(f"mask file not found: {path}")
    arr = np.asarray(Image.open(path).convert("L"), dtype=np.float32)
    return BinaryMask((arr >= 127.5).astype(np.float32))


def save_mask(mask: BinaryMask, path: str | os.PathLike) -> None:
    Image.fromarray((mask.data * 255).astype(np.uint8)).save(path)


def composite(pred: ImageTensor, source: ImageTensor, mask: BinaryMask) -> ImageTensor:
    """Hole-fill merge: prediction inside the mask, source pixels elsewhere."""
    if pred.data.shape != source.data.shape:
        raise ShapeMismatchError(
            f"pred {pred.data.shape} vs source {source.data.shape}"
        )
    if mask.shape != pred.data.shape[:2]:
        raise ShapeMismatchError(f"mask {mask.shape} vs image {pred.data.shape[:2]}")
    m = mask.data[:, :, None]
    return ImageTensor(pred.data * m + source.data * (1.0 - m), pred.range_tag)


def binarize(arr: np.ndarray, threshold: float = 0.5) -> BinaryMask:
    """Threshold a [0,1] map; values >= threshold become 1."""
    arr = np.asarray(arr, dtype=np.float32)
    return BinaryMask((arr >= threshold).astype(np.float32))


@dataclass
class ManifestRecord:
    image: str
    mask: str | None = None
    sketch: str | None = None


def load_manifest(path: str | os.PathLike) -> list[ManifestRecord]:
    """Parse a dataset manifest: JSON array of {image, mask?, sketch?} records."""
    path = Path(path)
    if not path.exists():
        raise SketchfillError(f"manifest not found: {path}")
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise SketchfillError("manifest must be a JSON array")
    records = []
    base = path.parent
    for entry in raw:
        if "image" not in entry:
            raise SketchfillError(f"manifest record missing 'image': {entry}")
        rec = ManifestRecord(
            image=str(base / entry["image"]),
            mask=str(base / entry["mask"]) if entry.get("mask") else None,
            sketch=str(base / entry["sketch"]) if entry.get("sketch") else None,
        )
        records.append(rec)
    return records
