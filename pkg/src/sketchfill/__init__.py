"""Sketch-guided interactive image inpainting toolkit."""

__version__ = "0.1.0"


class SketchfillError(Exception):
    """Base class for all errors raised by this package."""


class ShapeMismatchError(SketchfillError):
    """Two arrays that must share a shape do not."""


class CheckpointError(SketchfillError):
    """A checkpoint file is corrupt, truncated, or incompatible."""
