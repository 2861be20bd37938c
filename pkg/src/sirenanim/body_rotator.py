"""Student body rotator: a multi-resolution sine network driving warp,
direct generation, and alpha blending.

Image generation runs in three substeps at doubling resolutions. Substep 1
sees (x, y, body pose) per pixel on the coarse grid; later substeps see the
previous features upsampled 2x plus fresh coordinate channels. The last
fully connected layer is linear and splits into a 7-channel head: raw flow
offsets (2), a direct RGBA image (4), and an alpha map (1). The final frame
is always formed as alpha_blend(direct, warp(input, flow), alpha), so the
blending identity holds structurally.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .face_morpher import squash01
from .image_ops import alpha_blend, bilinear_upsample_2x, identity_grid, warp
from .siren import SirenLayer, init_layer, layer_forward

__all__ = [
    "BodyRotatorStudent",
    "RotatorOutputs",
    "build_body_rotator",
    "rotator_forward",
    "rotator_loss",
    "phase_weights",
    "PHASE_TABLE",
    "BODY_POSE_DIMS",
    "HEAD_CHANNELS",
]

BODY_POSE_DIMS = 6
HEAD_CHANNELS = 2 + 4 + 1  # flow, direct RGBA, alpha
SUBSTEP_LAYERS = (3, 3, 4)  # last substep carries the linear head


@dataclass
class BodyRotatorStudent:
    substeps: list[list[SirenLayer]]
    resolutions: tuple[int, ...]
    widths: tuple[int, ...] = field(default=(128, 96, 64))

    @property
    def output_resolution(self) -> int:
        return self.resolutions[-1]

    def layer_count(self) -> int:
        return sum(len(s) for s in self.substeps)

    def parameters(self) -> list[Tensor]:
        params = []
        for substep in self.substeps:
            for layer in substep:
                params.append(layer.weight)
                params.append(layer.bias)
        return params

    def parameter_names(self) -> list[str]:
        names = []
        for si, substep in enumerate(self.substeps):
            for li, _ in enumerate(substep):
                names.append(f"body.s{si}.layer{li}.weight")
                names.append(f"body.s{si}.layer{li}.bias")
        return names

    def param_count(self) -> int:
        return sum(l.param_count() for s in self.substeps for l in s)


def build_body_rotator(resolutions=(128, 256, 512), widths=(128, 96, 64),
                       seed: int = 0, w0_first: float = 30.0, w0_hidden: float = 1.0,
                       head_init_scale: float = 1.0,
                       dtype=np.float32) -> BodyRotatorStudent:
    """Build the three-substep rotator; each step's resolution must equal or
    double the previous one (equal = single-grid ablation).

    `head_init_scale` shrinks the linear head's initial parameters so the
    untrained model starts near the identity warp; short training runs
    converge far faster from there.
    """
    resolutions = tuple(int(r) for r in resolutions)
    widths = tuple(int(w) for w in widths)
    if len(resolutions) != 3 or len(widths) != 3:
        raise ValueError("rotator takes exactly three substeps")
    for a, b in zip(resolutions, resolutions[1:]):
        if b not in (a, 2 * a):
            raise ValueError(f"substep resolution {b} must equal or double {a}")
    rng = np.random.Generator(np.random.PCG64(seed))
    substeps: list[list[SirenLayer]] = []
    for si, (n_layers, width) in enumerate(zip(SUBSTEP_LAYERS, widths)):
        layers = []
        if si == 0:
            fan_in = 2 + BODY_POSE_DIMS
        else:
            fan_in = widths[si - 1] + 2
        for li in range(n_layers):
            is_head = si == len(SUBSTEP_LAYERS) - 1 and li == n_layers - 1
            fan_out = HEAD_CHANNELS if is_head else width
            first = si == 0 and li == 0
            layer = init_layer(
                rng, fan_in, fan_out,
                w0=w0_first if first else w0_hidden,
                first=first, sine=not is_head, dtype=dtype,
            )
            if is_head and head_init_scale != 1.0:
                layer.weight = Tensor(layer.weight.data * dtype(head_init_scale), _check=False)
                layer.bias = Tensor(layer.bias.data * dtype(head_init_scale), _check=False)
            layers.append(layer)
            fan_in = fan_out
        substeps.append(layers)
    return BodyRotatorStudent(substeps=substeps, resolutions=resolutions, widths=widths)


@dataclass
class RotatorOutputs:
    flow: Tensor  # (2, R, R) offsets in normalized coordinates
    direct: Tensor  # (4, R, R) in [0,1]
    alpha: Tensor  # (1, R, R) in [0,1]
    warped: Tensor  # (4, R, R)
    final: Tensor  # (4, R, R)


def _grid_cols(res: int, dtype) -> Tensor:
    grid = identity_grid(res, res, dtype=dtype)
    return ad.reshape(grid, (2, res * res))


def rotator_forward(model: BodyRotatorStudent, rest: Tensor, pose: np.ndarray) -> RotatorOutputs:
    pose = np.asarray(pose, dtype=np.float64).ravel()
    if pose.shape != (BODY_POSE_DIMS,):
        raise ValueError(f"body pose must have {BODY_POSE_DIMS} components, got {pose.shape}")
    out_res = model.output_resolution
    if rest.shape != (4, out_res, out_res):
        raise ValueError(f"rest image must be (4,{out_res},{out_res}), got {rest.shape}")
    dtype = model.substeps[0][0].weight.data.dtype

    r0 = model.resolutions[0]
    pose_cols = Tensor(
        np.repeat(pose.astype(dtype)[:, None], r0 * r0, axis=1), _check=False
    )
    cols = ad.concat([_grid_cols(r0, dtype), pose_cols], axis=0)
    prev_res = r0
    for si, substep in enumerate(model.substeps):
        if si > 0:
            res = model.resolutions[si]
            fmap = ad.reshape(cols, (cols.shape[0], prev_res, prev_res))
            if res == 2 * prev_res:
                fmap = bilinear_upsample_2x(fmap)
            feat_cols = ad.reshape(fmap, (fmap.shape[0], res * res))
            cols = ad.concat([feat_cols, _grid_cols(res, dtype)], axis=0)
            prev_res = res
        for layer in substep:
            cols = layer_forward(layer, cols)

    head = ad.reshape(cols, (HEAD_CHANNELS, out_res, out_res))
    flow = ad.slice_axis(head, 0, 0, 2)
    direct = squash01(ad.slice_axis(head, 0, 2, 6))
    alpha = squash01(ad.slice_axis(head, 0, 6, 7))
    warped = warp(rest, flow)
    final = alpha_blend(direct, warped, alpha)
    return RotatorOutputs(flow=flow, direct=direct, alpha=alpha, warped=warped, final=final)


def _l1(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ValueError(f"loss term shape mismatch: {a.shape} vs {b.shape}")
    return ad.mean(ad.abs_(ad.sub(a, b)))


def rotator_loss(student: RotatorOutputs, teacher: RotatorOutputs, weights) -> Tensor:
    """Weighted four-term L1: flow, warped, direct, final (element means)."""
    lam_flow, lam_warped, lam_direct, lam_final = (float(v) for v in weights)
    if min(lam_flow, lam_warped, lam_direct, lam_final) < 0:
        raise ValueError("loss weights must be non-negative")
    total = ad.scale(_l1(student.flow, teacher.flow), lam_flow)
    total = ad.add(total, ad.scale(_l1(student.warped, teacher.warped), lam_warped))
    total = ad.add(total, ad.scale(_l1(student.direct, teacher.direct), lam_direct))
    total = ad.add(total, ad.scale(_l1(student.final, teacher.final), lam_final))
    return total


# phase -> (upper example bound at the reference run length, loss weights)
PHASE_TABLE = (
    (400_000, (0.50, 0.25, 2.00, 0.25)),
    (800_000, (5.00, 2.50, 1.00, 1.00)),
    (1_500_000, (1.00, 1.00, 1.00, 10.00)),
)
REFERENCE_RUN_LENGTH = 1_500_000


def phase_weights(examples_seen: int, run_length: int = REFERENCE_RUN_LENGTH):
    """Loss weights for the training phase containing `examples_seen`.

    Phase boundaries are inclusive on the upper end and scale proportionally
    with the configured run length.
    """
    if examples_seen < 0:
        raise ValueError("examples_seen must be >= 0")
    s = run_length / REFERENCE_RUN_LENGTH
    for bound, weights in PHASE_TABLE:
        if examples_seen <= bound * s:
            return weights
    return PHASE_TABLE[-1][1]
