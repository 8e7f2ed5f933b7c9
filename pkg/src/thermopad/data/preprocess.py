"""Image preprocessing: bilinear resize, range scaling, standardization."""

from __future__ import annotations

import numpy as np

from .samples import Sample

__all__ = ["bilinear_resize", "preprocess"]

_STD_FLOOR = 1e-6


def bilinear_resize(image: np.ndarray, target: tuple[int, int]) -> np.ndarray:
    """Resize (h, w, c) to (target_h, target_w, c), half-pixel-center sampling.

    Source coordinates outside the image clamp to the border, so identity
    targets reproduce the input up to float rounding.
    """
    h, w = image.shape[:2]
    th, tw = target
    if (h, w) == (th, tw):
        return image.astype(np.float64, copy=True)
    ys = np.clip((np.arange(th) + 0.5) * (h / th) - 0.5, 0.0, h - 1.0)
    xs = np.clip((np.arange(tw) + 0.5) * (w / tw) - 0.5, 0.0, w - 1.0)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None, None]
    fx = (xs - x0)[None, :, None]
    img = image.astype(np.float64)
    top = img[y0][:, x0] * (1 - fx) + img[y0][:, x1] * fx
    bot = img[y1][:, x0] * (1 - fx) + img[y1][:, x1] * fx
    return top * (1 - fy) + bot * fy


def _to_unit_range(image: np.ndarray) -> np.ndarray:
    if np.issubdtype(image.dtype, np.integer):
        return image.astype(np.float64) / np.iinfo(image.dtype).max
    return image.astype(np.float64)


def preprocess(sample: Sample, target: tuple[int, int]) -> np.ndarray:
    """Resize to ``target`` and standardize to zero mean, unit variance.

    Integer images are first scaled to [0, 1] by their dtype range.  The
    mean and std are taken jointly over all pixels and channels; the std is
    floored at 1e-6, so a constant image standardizes to all zeros.
    """
    x = bilinear_resize(_to_unit_range(sample.image), target)
    std = float(x.std())
    if std < _STD_FLOOR:
        # constant image: centering leaves only rounding residue, so the
        # floored division would amplify noise; the honest output is zeros
        return np.zeros_like(x)
    return (x - x.mean()) / std
