"""Procedural character images and organ masks for demos and desk-scale runs.

The generated image is a stylized half-body portrait built from smooth
shapes: soft edges keep it friendly both to sine-network fitting and to the
synthetic teacher's blur branch. Everything is a pure function of
normalized coordinates, so any resolution renders the same character.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor
from .face_morpher import CropRect

__all__ = ["make_test_character", "make_face_mask", "default_crop"]


def _smoothstep(e0, e1, x):
    t = np.clip((x - e0) / (e1 - e0), 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def _blob(xx, yy, cx, cy, rx, ry, soft=0.08):
    d = np.sqrt(((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2)
    return 1.0 - _smoothstep(1.0 - soft, 1.0 + soft, d)


def make_test_character(size: int = 512, seed: int = 7) -> Tensor:
    """Render a smooth anime-ish bust with transparent background."""
    rng = np.random.Generator(np.random.PCG64(seed))
    ys = np.linspace(-1.0, 1.0, size)
    xs = np.linspace(-1.0, 1.0, size)
    yy, xx = np.meshgrid(ys, xs, indexing="ij")

    torso = _blob(xx, yy, 0.0, 0.85, 0.62, 0.75, soft=0.10)
    head = _blob(xx, yy, 0.0, -0.25, 0.42, 0.46, soft=0.08)
    hair = _blob(xx, yy, 0.0, -0.38, 0.52, 0.50, soft=0.10)
    coverage = np.maximum(torso, np.maximum(head, hair))

    base = rng.uniform(0.25, 0.75, size=3)
    r = base[0] + 0.20 * xx + 0.10 * np.sin(2.3 * yy)
    g = base[1] - 0.15 * yy + 0.08 * np.cos(2.0 * xx)
    b = base[2] + 0.12 * xx * yy

    hair_tint = hair * (1.0 - 0.7 * head)
    r = r - 0.18 * hair_tint
    g = g - 0.10 * hair_tint
    b = b + 0.15 * hair_tint

    skin = head * (1.0 - 0.55 * hair_tint)
    r = r + 0.22 * skin
    g = g + 0.12 * skin
    b = b + 0.05 * skin

    # soft facial features so the crop window has learnable detail
    for cx, cy, rad, tint in (
        (-0.14, -0.27, 0.055, -0.35),  # eyes
        (0.14, -0.27, 0.055, -0.35),
        (0.0, -0.08, 0.05, -0.25),  # mouth
        (-0.20, -0.18, 0.09, 0.12),  # cheeks
        (0.20, -0.18, 0.09, 0.12),
    ):
        spot = _blob(xx, yy, cx, cy, rad, rad * 0.8, soft=0.35)
        r = r + tint * spot
        g = g + 0.6 * tint * spot
        b = b + 0.5 * tint * spot

    shirt = torso * (1.0 - head) * (1.0 - hair)
    r = r - 0.10 * shirt
    g = g + 0.05 * shirt
    b = b + 0.20 * shirt

    rgb = np.stack([r, g, b])
    rgb = 0.15 + 0.7 * np.clip(rgb, 0.0, 1.0)  # keep tones away from clipping
    alpha = np.clip(coverage, 0.0, 1.0)[None]
    return Tensor(np.concatenate([rgb, alpha]).astype(np.float32), _check=False)


def default_crop(size: int = 512) -> CropRect:
    """Face window centered on the generated character's facial features."""
    w = max(size // 4, 1)
    x = (size - w) // 2
    y = max(int(size * 0.22), 0)
    return CropRect(x=x, y=y, width=w, height=w)


def make_face_mask(crop: CropRect) -> Tensor:
    """Binary organ mask covering the generated character's eyes and mouth."""
    h, w = crop.height, crop.width
    ys = np.linspace(-1.0, 1.0, h)
    xs = np.linspace(-1.0, 1.0, w)
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    organs = (
        _blob(xx, yy, -0.45, -0.25, 0.30, 0.25, soft=0.01)
        + _blob(xx, yy, 0.45, -0.25, 0.30, 0.25, soft=0.01)
        + _blob(xx, yy, 0.0, 0.45, 0.35, 0.25, soft=0.01)
    )
    return Tensor((organs > 0.5).astype(np.float32)[None], _check=False)
