"""Built-in ground-truth yield images.

Three generators cover the textures the estimators care about: smooth
large-scale structure (gradient), hard edges (checkerboard), and blobby
specimen-like texture (blobs). Each produces values in [0, 1] that are
affinely remapped into the requested yield range.
"""

import numpy as np

from .acquisition import YieldImage

__all__ = ["make_truth", "TRUTH_KINDS"]

TRUTH_KINDS = ("gradient", "checkerboard", "blobs")


def _unit_gradient(width, height):
    x = np.linspace(0.0, 1.0, width)
    y = np.linspace(0.0, 1.0, height)
    xx, yy = np.meshgrid(x, y)
    field = 0.55 * xx + 0.25 * yy + 0.2 * np.sin(3.0 * np.pi * xx) * np.sin(2.0 * np.pi * yy)
    lo, hi = field.min(), field.max()
    return (field - lo) / (hi - lo)


def _unit_checkerboard(width, height):
    block = max(2, min(width, height) // 8)
    xx, yy = np.meshgrid(np.arange(width) // block, np.arange(height) // block)
    return ((xx + yy) % 2).astype(float)


def _unit_blobs(width, height, rng, k=12):
    x = np.arange(width)
    y = np.arange(height)
    xx, yy = np.meshgrid(x, y)
    scale = min(width, height)
    field = np.zeros((height, width))
    for _ in range(k):
        cx = rng.uniform(0, width - 1)
        cy = rng.uniform(0, height - 1)
        s = rng.uniform(0.05, 0.2) * scale
        amp = rng.uniform(-1.0, 1.0)
        field += amp * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2.0 * s * s))
    lo, hi = field.min(), field.max()
    if hi == lo:
        return np.full((height, width), 0.5)
    return (field - lo) / (hi - lo)


def make_truth(kind, width, height, eta_min, eta_max, rng=None) -> YieldImage:
    """Generate a synthetic truth with yields spanning [eta_min, eta_max].

    The blobs generator consumes draws from rng; the other kinds are
    deterministic and leave the generator untouched.
    """
    if eta_min < 0 or eta_max <= eta_min:
        raise ValueError("need 0 <= eta_min < eta_max")
    if width < 1 or height < 1:
        raise ValueError("image dimensions must be at least 1x1")
    if kind == "gradient":
        unit = _unit_gradient(width, height)
    elif kind == "checkerboard":
        unit = _unit_checkerboard(width, height)
    elif kind == "blobs":
        if rng is None:
            raise ValueError("the blobs generator needs an rng")
        unit = _unit_blobs(width, height, rng)
    else:
        raise ValueError(f"unknown truth kind {kind!r}; choose from {TRUTH_KINDS}")
    return YieldImage(eta_min + (eta_max - eta_min) * unit)
