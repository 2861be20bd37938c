"""Student face morpher: one SIREN drawing the movable-face crop window.

The network maps (x, y, facial pose) to an RGBA pixel; rendering a region
means evaluating it on an identity grid over the crop window. The output
head is squashed to [0,1] by (tanh+1)/2. Compositing is a hard window
replacement into the full-frame image.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .image_ops import identity_grid, load_png
from .siren import SirenMlp, siren_forward, siren_init

__all__ = [
    "CropRect",
    "FaceMorpherStudent",
    "build_face_morpher",
    "render_face_region",
    "composite_face",
    "face_morpher_loss",
    "load_face_mask",
    "FACE_POSE_DIMS",
]

FACE_POSE_DIMS = 39
DEFAULT_FACE_WIDTHS = [2 + FACE_POSE_DIMS] + [128] * 8 + [4]


@dataclass(frozen=True)
class CropRect:
    """Window inside the full frame: origin (x, y), size (width, height)."""

    x: int
    y: int
    width: int = 128
    height: int = 128

    def validate_inside(self, frame_h: int, frame_w: int):
        if self.x < 0 or self.y < 0 or self.x + self.width > frame_w or self.y + self.height > frame_h:
            raise ValueError(
                f"crop {self} does not fit inside a {frame_w}x{frame_h} frame"
            )


@dataclass
class FaceMorpherStudent:
    mlp: SirenMlp
    crop: CropRect
    # gain on the pose inputs before concatenation with (x, y). The teacher
    # varies gently with pose but sharply in space, so the pose columns want
    # a much lower effective frequency than w0_first gives the coordinates;
    # scaling the inputs is equivalent to a per-group frequency scale while
    # leaving the initialization scheme untouched.
    pose_gain: float = 1.0

    def parameters(self) -> list[Tensor]:
        return self.mlp.parameters()

    def parameter_names(self) -> list[str]:
        return self.mlp.parameter_names(prefix="face.layer")

    def param_count(self) -> int:
        return self.mlp.param_count()


def build_face_morpher(crop: CropRect, hidden: int = 128, seed: int = 0,
                       w0_first: float = 30.0, w0_hidden: float = 1.0,
                       pose_gain: float = 1.0, dtype=np.float32) -> FaceMorpherStudent:
    widths = [2 + FACE_POSE_DIMS] + [hidden] * 8 + [4]
    mlp = siren_init(widths, w0_first=w0_first, w0_hidden=w0_hidden, seed=seed, dtype=dtype)
    return FaceMorpherStudent(mlp=mlp, crop=crop, pose_gain=pose_gain)


def _pose_columns(pose: np.ndarray, n: int, dtype) -> Tensor:
    tiled = np.repeat(np.asarray(pose, dtype=dtype)[:, None], n, axis=1)
    return Tensor(tiled, _check=False)


def squash01(t: Tensor) -> Tensor:
    """Map raw head output onto [0,1] via (tanh+1)/2."""
    return ad.scale(ad.shift(ad.tanh(t), 1.0), 0.5)


def render_face_region(model: FaceMorpherStudent, pose: np.ndarray) -> Tensor:
    """Evaluate the SIREN over the crop grid, returning a (4,h,w) image."""
    pose = np.asarray(pose, dtype=np.float64).ravel()
    if pose.shape != (FACE_POSE_DIMS,):
        raise ValueError(f"face pose must have {FACE_POSE_DIMS} components, got {pose.shape}")
    h, w = model.crop.height, model.crop.width
    dtype = model.mlp.layers[0].weight.data.dtype
    grid = identity_grid(h, w, dtype=dtype)
    grid_cols = ad.reshape(grid, (2, h * w))
    pose_cols = _pose_columns(pose * model.pose_gain, h * w, dtype)
    x = ad.concat([grid_cols, pose_cols], axis=0)
    raw = siren_forward(model.mlp, x)
    return ad.reshape(squash01(raw), (4, h, w))


def composite_face(rest: Tensor, region: Tensor, crop: CropRect) -> Tensor:
    """Replace the crop window of the full frame with the rendered region."""
    _, fh, fw = rest.shape
    crop.validate_inside(fh, fw)
    if region.shape != (4, crop.height, crop.width):
        raise ValueError(
            f"face region shape {region.shape} does not match crop "
            f"{(4, crop.height, crop.width)}"
        )
    out = rest.data.copy()
    out[:, crop.y:crop.y + crop.height, crop.x:crop.x + crop.width] = region.data
    return Tensor(out, _check=False)


def face_morpher_loss_terms(student: Tensor, teacher: Tensor, mask: Tensor,
                            lam: float = 20.0):
    """(total, plain, masked) where total = plain + lam * masked."""
    if student.shape != teacher.shape:
        raise ValueError(f"shape mismatch: {student.shape} vs {teacher.shape}")
    if mask.shape[0] != 1 or mask.shape[1:] != student.shape[1:]:
        raise ValueError(f"mask shape {mask.shape} incompatible with {student.shape}")
    diff = ad.sub(student, teacher)
    plain = ad.mean(ad.abs_(diff))
    masked = ad.mean(ad.abs_(ad.mul(mask, diff)))
    return ad.add(plain, ad.scale(masked, lam)), plain, masked


def face_morpher_loss(student: Tensor, teacher: Tensor, mask: Tensor,
                      lam: float = 20.0) -> Tensor:
    """Element-mean L1 plus lam-weighted element-mean L1 over the organ mask."""
    return face_morpher_loss_terms(student, teacher, mask, lam)[0]


def load_face_mask(path, crop: CropRect) -> Tensor:
    """Load a binary organ mask; any pixel with nonzero RGB becomes 1."""
    img = load_png(path)
    if img.shape[1] != crop.height or img.shape[2] != crop.width:
        raise ValueError(
            f"mask is {img.shape[2]}x{img.shape[1]}, crop needs "
            f"{crop.width}x{crop.height}"
        )
    binary = (img.data[:3].max(axis=0, keepdims=True) > 0).astype(np.float32)
    return Tensor(binary, _check=False)
