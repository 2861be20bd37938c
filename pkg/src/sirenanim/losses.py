"""Perceptual loss calculators with a pluggable feature extractor.

The combinator sums per-level mean L1 distances over two 3-channel views of
an RGBA image: the color channels, and the alpha channel repeated three
times. A stochastic variant evaluates one view per call, reweighted so the
estimator stays unbiased. Extractors are deliberately an interface:
production perceptual features need pretrained weights, but the formulas
are testable with an identity extractor or fixed random projections.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .image_ops import box_downsample_2x

__all__ = [
    "FeatureExtractor",
    "IdentityExtractor",
    "RandomProjectionExtractor",
    "rgb_view",
    "aaa_view",
    "phi_loss",
    "phi_loss_stochastic",
    "quadrant_loss",
    "half_loss",
    "RGB_PROBABILITY",
]

RGB_PROBABILITY = 0.75


class FeatureExtractor:
    """Ordered feature maps of a 3-channel image; deterministic shapes."""

    def levels(self, image3: Tensor) -> list[Tensor]:
        raise NotImplementedError


class IdentityExtractor(FeatureExtractor):
    """Single level: the image itself."""

    def levels(self, image3: Tensor) -> list[Tensor]:
        return [image3]


class RandomProjectionExtractor(FeatureExtractor):
    """Fixed random channel projections of decreasing width, one per level.

    A cheap deterministic stand-in for a pretrained feature stack.
    """

    def __init__(self, seed: int = 0, widths=(8, 5, 3)):
        rng = np.random.Generator(np.random.PCG64(seed))
        self._mats = [
            rng.normal(scale=1.0 / np.sqrt(3.0), size=(w, 3)) for w in widths
        ]

    def levels(self, image3: Tensor) -> list[Tensor]:
        c, h, w = image3.shape
        cols = ad.reshape(image3, (c, h * w))
        out = []
        for mat in self._mats:
            proj = Tensor(mat.astype(image3.data.dtype), _check=False)
            out.append(ad.matmul(proj, cols))
        return out


def _require_rgba(*images: Tensor):
    shape = images[0].shape
    for img in images:
        if img.shape != shape:
            raise ValueError(f"image shape mismatch: {img.shape} vs {shape}")
        if img.data.ndim != 3 or img.shape[0] != 4:
            raise ValueError(f"expected (4,H,W) images, got {img.shape}")


def rgb_view(image: Tensor) -> Tensor:
    return ad.slice_axis(image, 0, 0, 3)


def aaa_view(image: Tensor) -> Tensor:
    a = ad.slice_axis(image, 0, 3, 4)
    return ad.concat([a, a, a], axis=0)


def _mean_l1(a: Tensor, b: Tensor) -> Tensor:
    return ad.mean(ad.abs_(ad.sub(a, b)))


def _view_term(i1: Tensor, i2: Tensor, extractor: FeatureExtractor, view) -> Tensor:
    total = None
    for f1, f2 in zip(extractor.levels(view(i1)), extractor.levels(view(i2))):
        term = _mean_l1(f1, f2)
        total = term if total is None else ad.add(total, term)
    return total


def phi_loss(i1: Tensor, i2: Tensor, extractor: FeatureExtractor) -> Tensor:
    """Exact two-view combinator: sum_i c_i (L1 rgb + L1 aaa), c_i = 1/numel."""
    _require_rgba(i1, i2)
    return ad.add(
        _view_term(i1, i2, extractor, rgb_view),
        _view_term(i1, i2, extractor, aaa_view),
    )


def phi_loss_stochastic(i1: Tensor, i2: Tensor, extractor: FeatureExtractor,
                        rng: np.random.Generator) -> Tensor:
    """One-view estimate of phi_loss, unbiased by construction.

    Heads (probability 3/4) evaluates the rgb view scaled by 4/3; tails
    evaluates the aaa view scaled by 4.
    """
    _require_rgba(i1, i2)
    if rng.random() < RGB_PROBABILITY:
        return ad.scale(_view_term(i1, i2, extractor, rgb_view), 1.0 / RGB_PROBABILITY)
    return ad.scale(_view_term(i1, i2, extractor, aaa_view), 1.0 / (1.0 - RGB_PROBABILITY))


def _quadrants(img: Tensor):
    _, h, w = img.shape
    top = ad.slice_axis(img, 1, 0, h // 2)
    bottom = ad.slice_axis(img, 1, h // 2, h)
    return (
        ad.slice_axis(top, 2, 0, w // 2),
        ad.slice_axis(top, 2, w // 2, w),
        ad.slice_axis(bottom, 2, 0, w // 2),
        ad.slice_axis(bottom, 2, w // 2, w),
    )


def quadrant_loss(i1: Tensor, i2: Tensor, extractor: FeatureExtractor) -> Tensor:
    """Sum of phi_loss over the four half-size quadrants."""
    _require_rgba(i1, i2)
    _, h, w = i1.shape
    if h != w or h % 2:
        raise ValueError(f"quadrant loss needs square even-sized images, got {h}x{w}")
    total = None
    for q1, q2 in zip(_quadrants(i1), _quadrants(i2)):
        term = phi_loss(q1, q2, extractor)
        total = term if total is None else ad.add(total, term)
    return total


def half_loss(i1: Tensor, i2: Tensor, extractor: FeatureExtractor) -> Tensor:
    """phi_loss after a 2x box downscale of both images."""
    _require_rgba(i1, i2)
    return phi_loss(box_downsample_2x(i1), box_downsample_2x(i2), extractor)
