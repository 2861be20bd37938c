"""Analytic teacher oracle for desk-scale distillation runs.

The real teacher is a large neural system; this stand-in supplies every
supervision tensor the student losses need from closed-form rules, so a
training run can be verified end to end on one machine:

* body pose drives a small 2D similarity+shear transform whose field,
  minus the identity grid, is the teacher appearance flow;
* the direct branch is the warped image under a fixed Gaussian blur;
* the alpha map is a fixed vertical ramp;
* the facial pose smoothly recolors the crop window of the rest image.

A zero pose is the identity: zero flow, the rest image warps to itself,
and the face region equals the rest crop exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor
from .body_rotator import RotatorOutputs
from .face_morpher import CropRect, FACE_POSE_DIMS
from .image_ops import alpha_blend, identity_grid, warp

__all__ = ["TeacherOracle", "TeacherParams", "SyntheticTeacher"]


class TeacherOracle:
    """What a distillation run needs from a teacher."""

    def face_region(self, rest: Tensor, pose39: np.ndarray) -> Tensor:
        raise NotImplementedError

    def rotator_outputs(self, image: Tensor, pose6: np.ndarray) -> RotatorOutputs:
        raise NotImplementedError

    def evaluate(self, rest: Tensor, pose45: np.ndarray):
        """Both teacher products for one 45-dim pose."""
        pose45 = np.asarray(pose45, dtype=np.float64).ravel()
        face = self.face_region(rest, pose45[:FACE_POSE_DIMS])
        body = self.rotator_outputs(rest, pose45[FACE_POSE_DIMS:])
        return face, body


@dataclass(frozen=True)
class TeacherParams:
    max_angle: float = 0.15  # radians
    max_shift: float = 0.06  # normalized units
    max_scale: float = 0.05
    max_shear: float = 0.05
    blur_sigma: float = 1.5  # pixels
    alpha_top: float = 0.10
    alpha_bottom: float = 0.30
    recolor_amp: float = 0.12


def _gaussian_kernel(sigma: float) -> np.ndarray:
    radius = max(int(3.0 * sigma + 0.5), 1)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _blur_separable(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    radius = (len(kernel) - 1) // 2
    out = np.zeros_like(img)
    padded = np.pad(img, ((0, 0), (radius, radius), (0, 0)), mode="edge")
    for i, kv in enumerate(kernel):
        out += kv * padded[:, i:i + img.shape[1], :]
    out2 = np.zeros_like(out)
    padded = np.pad(out, ((0, 0), (0, 0), (radius, radius)), mode="edge")
    for i, kv in enumerate(kernel):
        out2 += kv * padded[:, :, i:i + img.shape[2]]
    return out2


# three smooth recolor fields per color channel; the 39 facial pose dims
# drive them through a fixed low-rank mixing so the target stays learnable
# by a narrow student at desk scale
_RECOLOR_RANK = 3


def _recolor_basis(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    pi = np.pi
    return np.stack([
        np.sin(pi * u) * np.cos(0.5 * pi * v),
        (u * v + 0.5 * np.cos(pi * v)) / 1.5,
        (u * u - v * v + np.sin(0.7 * pi * (u + v))) / 2.0,
    ])


def _pose_mixing(n_pose: int) -> np.ndarray:
    """Fixed (rank, n_pose) matrix with unit-L1 rows; deterministic."""
    rng = np.random.Generator(np.random.PCG64(0x5EED))
    mat = rng.uniform(-1.0, 1.0, size=(_RECOLOR_RANK * 3, n_pose))
    return mat / np.abs(mat).sum(axis=1, keepdims=True)


class SyntheticTeacher(TeacherOracle):
    def __init__(self, crop: CropRect, params: TeacherParams | None = None):
        self.crop = crop
        self.params = params or TeacherParams()
        self._kernel = _gaussian_kernel(self.params.blur_sigma)
        self._basis_cache: dict[tuple[int, int], np.ndarray] = {}
        self._mixing = _pose_mixing(FACE_POSE_DIMS)

    # -- body ---------------------------------------------------------------

    def transform(self, pose6: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Pose-driven sampling transform: A (2x2) and translation t."""
        p = np.asarray(pose6, dtype=np.float64).ravel()
        if p.shape != (6,):
            raise ValueError(f"body pose must have 6 components, got {p.shape}")
        prm = self.params
        theta = prm.max_angle * p[0]
        tx, ty = prm.max_shift * p[1], prm.max_shift * p[2]
        s = 1.0 + prm.max_scale * p[3]
        shx, shy = prm.max_shear * p[4], prm.max_shear * p[5]
        rot = np.array([[np.cos(theta), -np.sin(theta)],
                        [np.sin(theta), np.cos(theta)]])
        shear = np.array([[1.0, shx], [shy, 1.0]])
        a = rot @ (s * shear)
        return a, np.array([tx, ty])

    def flow_field(self, resolution: int, pose6: np.ndarray, dtype=np.float32) -> Tensor:
        a, t = self.transform(pose6)
        grid = identity_grid(resolution, resolution, dtype=np.float64).data
        cols = grid.reshape(2, -1)
        flow = (a - np.eye(2)) @ cols + t[:, None]
        return Tensor(flow.reshape(2, resolution, resolution).astype(dtype), _check=False)

    def rotator_outputs(self, image: Tensor, pose6: np.ndarray) -> RotatorOutputs:
        c, h, w = image.shape
        if c != 4 or h != w:
            raise ValueError(f"expected a square RGBA image, got {image.shape}")
        dtype = image.data.dtype
        flow = self.flow_field(h, pose6, dtype=dtype)
        warped = warp(image, flow)
        direct = Tensor(
            _blur_separable(warped.data.astype(np.float64), self._kernel).astype(dtype),
            _check=False,
        )
        ramp = np.linspace(self.params.alpha_top, self.params.alpha_bottom, h)
        alpha = Tensor(
            np.broadcast_to(ramp[:, None], (h, w))[None].astype(dtype), _check=False
        )
        final = alpha_blend(direct, warped, alpha)
        return RotatorOutputs(flow=flow, direct=direct, alpha=alpha, warped=warped, final=final)

    # -- face ---------------------------------------------------------------

    def _basis(self, h: int, w: int) -> np.ndarray:
        key = (h, w)
        basis = self._basis_cache.get(key)
        if basis is None:
            vs = np.linspace(-1.0, 1.0, h) if h > 1 else np.zeros(1)
            us = np.linspace(-1.0, 1.0, w) if w > 1 else np.zeros(1)
            vv, uu = np.meshgrid(vs, us, indexing="ij")
            basis = _recolor_basis(uu, vv)
            self._basis_cache[key] = basis
        return basis

    def face_region(self, rest: Tensor, pose39: np.ndarray) -> Tensor:
        p = np.asarray(pose39, dtype=np.float64).ravel()
        if p.shape != (FACE_POSE_DIMS,):
            raise ValueError(f"face pose must have {FACE_POSE_DIMS} components, got {p.shape}")
        crop = self.crop
        crop.validate_inside(rest.shape[1], rest.shape[2])
        window = rest.data[:, crop.y:crop.y + crop.height, crop.x:crop.x + crop.width]
        basis = self._basis(crop.height, crop.width)
        # (3 channels x rank) smooth coefficients, each a unit-L1 form in p
        coeff = (self._mixing @ p).reshape(3, _RECOLOR_RANK)
        delta = (self.params.recolor_amp / _RECOLOR_RANK) * np.einsum("ck,khw->chw", coeff, basis)
        out = window.astype(np.float64).copy()
        out[:3] = np.clip(out[:3] + delta, 0.0, 1.0)
        return Tensor(out.astype(rest.data.dtype), _check=False)
