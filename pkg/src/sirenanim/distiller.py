"""Distillation training loops, schedules, pose sampling, and evaluation.

Both students are trained with Adam against a teacher oracle. A run is
fully determined by (seed, config, inputs): pose sampling, initialization,
and gradient reduction are all fixed-order, so reruns produce bit-identical
parameters on one platform.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .autodiff import AdamState, Tape, Tensor, adam_step, backward
from . import autodiff as ad
from .body_rotator import (
    PHASE_TABLE,
    REFERENCE_RUN_LENGTH,
    BodyRotatorStudent,
    build_body_rotator,
    rotator_forward,
    rotator_loss,
)
from .face_morpher import (
    CropRect,
    FACE_POSE_DIMS,
    FaceMorpherStudent,
    build_face_morpher,
    face_morpher_loss_terms,
    render_face_region,
    squash01,
)
from .image_ops import identity_grid
from .metrics import psnr
from .siren import siren_forward
from .synthetic_teacher import TeacherOracle

__all__ = [
    "TrainConfig",
    "PoseSampler",
    "SyntheticPoseSampler",
    "FilePoseSampler",
    "make_pose_sampler",
    "load_pose_csv",
    "save_pose_csv",
    "lr_schedule_face",
    "lr_schedule_body",
    "PhaseSchedule",
    "build_phase_schedule",
    "LossHistory",
    "distill_face_morpher",
    "distill_body_rotator",
    "held_out_poses",
    "face_region_psnr",
    "rotator_final_psnr",
    "FACE_REFERENCE_RUN",
    "BODY_REFERENCE_RUN",
]

POSE_DIMS = 45
FACE_REFERENCE_RUN = 1_000_000
BODY_REFERENCE_RUN = 1_500_000

# feature columns per forward chunk; keeps activations inside the last-level
# cache, which is worth several x in wall time on bandwidth-starved hosts
_FACE_CHUNK_PIXELS = 65536

_FACE_LR_MILESTONES = (200_000, 500_000, 800_000)
_FACE_LR_VALUES = (1e-4, 3.33e-5, 1e-5, 3.33e-6)
_BODY_LR_MILESTONES = (200_000, 600_000, 1_300_000)
_BODY_LR_VALUES = (1e-4, 3e-5, 1e-5, 3e-6)


# ---------------------------------------------------------------------------
# configuration


@dataclass
class TrainConfig:
    examples: int
    batch_size: int = 8
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    pose_source: str = "synthetic"  # or a pose CSV path
    history_every: int = 25  # steps between history rows
    phases: tuple[int, ...] = (1, 2, 3)  # body rotator only

    def __post_init__(self):
        if self.examples <= 0:
            raise ValueError("examples must be positive")
        if self.batch_size <= 0:
            raise ValueError("batch size must be positive")


# ---------------------------------------------------------------------------
# pose sources


class PoseSampler:
    def sample(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError


class SyntheticPoseSampler(PoseSampler):
    """Each of the 45 components uniform in [-1, 1]."""

    def sample(self, rng):
        return rng.uniform(-1.0, 1.0, size=POSE_DIMS)


class FilePoseSampler(PoseSampler):
    """Uniform row choice from a pose CSV."""

    def __init__(self, poses: np.ndarray):
        if poses.ndim != 2 or poses.shape[1] != POSE_DIMS or poses.shape[0] == 0:
            raise ValueError(f"pose table must be (n,{POSE_DIMS}) and non-empty")
        self.poses = poses

    def sample(self, rng):
        return self.poses[int(rng.integers(0, len(self.poses)))]


def load_pose_csv(path) -> np.ndarray:
    """Pose file: CSV, 45 columns, one pose per row, no header."""
    import warnings

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # loadtxt warns on empty input
            table = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"{path}: cannot parse pose CSV: {exc}")
    if table.size == 0:
        raise ValueError(f"{path}: pose file is empty")
    if table.shape[1] != POSE_DIMS:
        raise ValueError(f"{path}: expected {POSE_DIMS} columns, got {table.shape[1]}")
    if not np.all(np.isfinite(table)):
        raise ValueError(f"{path}: pose file contains non-finite values")
    return table


def save_pose_csv(path, poses: np.ndarray):
    np.savetxt(path, np.asarray(poses), delimiter=",", fmt="%.8g")


def make_pose_sampler(source) -> PoseSampler:
    if source == "synthetic":
        return SyntheticPoseSampler()
    return FilePoseSampler(load_pose_csv(source))


def held_out_poses(n: int, seed: int = 12345) -> np.ndarray:
    """Fixed evaluation poses drawn from a stream training never touches."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0xE7A1])))
    return rng.uniform(-1.0, 1.0, size=(n, POSE_DIMS))


# ---------------------------------------------------------------------------
# schedules


def _milestone_lr(examples_seen, milestones, values, run_length, reference_run):
    if examples_seen < 0:
        raise ValueError("examples_seen must be >= 0")
    s = run_length / reference_run
    lr = values[0]
    for m, v in zip(milestones, values[1:]):
        if examples_seen >= m * s:
            lr = v
    return lr


def lr_schedule_face(examples_seen: int, run_length: int = FACE_REFERENCE_RUN) -> float:
    """1e-4 decaying to 3.33e-5 / 1e-5 / 3.33e-6 after 200K/500K/800K of 1M."""
    return _milestone_lr(examples_seen, _FACE_LR_MILESTONES, _FACE_LR_VALUES,
                         run_length, FACE_REFERENCE_RUN)


def lr_schedule_body(examples_seen: int, run_length: int = BODY_REFERENCE_RUN) -> float:
    """1e-4 decaying to 3e-5 / 1e-5 / 3e-6 after 200K/600K/1.3M of 1.5M."""
    return _milestone_lr(examples_seen, _BODY_LR_MILESTONES, _BODY_LR_VALUES,
                         run_length, BODY_REFERENCE_RUN)


@dataclass(frozen=True)
class PhaseSchedule:
    """Inclusive upper example bounds paired with four-term loss weights."""

    bounds: tuple[float, ...]
    weights: tuple[tuple[float, float, float, float], ...]

    def at(self, examples_seen: int):
        for bound, w in zip(self.bounds, self.weights):
            if examples_seen <= bound:
                return w
        return self.weights[-1]


def build_phase_schedule(run_length: int, phases=(1, 2, 3)) -> PhaseSchedule:
    """Scale the reference phase table to `run_length`, keeping only `phases`.

    Dropping a leading phase extends the next kept phase back to example 0,
    which is how the no-phase-1 ablation trains with phase-2 weights from
    the start.
    """
    phases = tuple(sorted(set(phases)))
    if not phases or any(p not in (1, 2, 3) for p in phases):
        raise ValueError("phases must be a non-empty subset of {1,2,3}")
    s = run_length / REFERENCE_RUN_LENGTH
    bounds = []
    weights = []
    for p in phases:
        bound, w = PHASE_TABLE[p - 1]
        bounds.append(bound * s)
        weights.append(w)
    bounds[-1] = max(bounds[-1], float(run_length))
    return PhaseSchedule(bounds=tuple(bounds), weights=tuple(weights))


# ---------------------------------------------------------------------------
# loss history


class LossHistory:
    def __init__(self, columns):
        self.columns = list(columns)
        self.rows: list[tuple] = []

    def append(self, *values):
        if len(values) != len(self.columns):
            raise ValueError("history row width mismatch")
        self.rows.append(tuple(float(v) for v in values))

    def column(self, name) -> np.ndarray:
        idx = self.columns.index(name)
        return np.array([row[idx] for row in self.rows])

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            writer.writerows(self.rows)

    @classmethod
    def load_csv(cls, path):
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            columns = next(reader)
            hist = cls(columns)
            for row in reader:
                hist.append(*[float(v) for v in row])
        return hist


def _check_finite_loss(value: float, step: int, context: str):
    if not np.isfinite(value):
        raise FloatingPointError(
            f"{context}: non-finite loss {value} at step {step}; aborting the run"
        )


# ---------------------------------------------------------------------------
# face morpher distillation


def distill_face_morpher(rest: Tensor, mask: Tensor | None, crop: CropRect,
                         teacher: TeacherOracle, config: TrainConfig,
                         hidden: int = 128, w0_first: float = 30.0,
                         w0_hidden: float = 1.0, pose_gain: float = 1.0,
                         progress=None):
    """Train a face morpher against the teacher's crop-window outputs."""
    crop.validate_inside(rest.shape[1], rest.shape[2])
    root = np.random.SeedSequence(config.seed)
    init_seq, pose_seq = root.spawn(2)
    model = build_face_morpher(crop, hidden=hidden, seed=init_seq,
                               w0_first=w0_first, w0_hidden=w0_hidden,
                               pose_gain=pose_gain)
    sampler = make_pose_sampler(config.pose_source)
    rng = np.random.Generator(np.random.PCG64(pose_seq))

    n = crop.height * crop.width
    batch = config.batch_size
    # evaluate the batch in fixed-order chunks sized to stay cache-resident;
    # gradient reduction over chunks is a deterministic sequential sum
    chunk = max(1, min(batch, _FACE_CHUNK_PIXELS // n))
    n_chunks = -(-batch // chunk)
    grid_cols = identity_grid(crop.height, crop.width).data.reshape(2, n)
    if mask is None:
        mask_data = np.ones((1, crop.height, crop.width), dtype=np.float32)
    else:
        mask_data = mask.data.astype(np.float32)
    mask_flat = mask_data.reshape(1, n)

    params = model.parameters()
    state = AdamState(params, beta1=config.beta1, beta2=config.beta2,
                      eps=config.eps, names=model.parameter_names())
    history = LossHistory(["step", "examples", "lr", "loss", "l1", "masked_l1"])

    chunk_sizes = {chunk, batch - (n_chunks - 1) * chunk}
    chunk_consts = {
        size: (np.tile(grid_cols, (1, size)),
               Tensor(np.tile(mask_flat, (1, size)), _check=False))
        for size in chunk_sizes if size > 0
    }

    steps = -(-config.examples // batch)  # ceil
    examples_seen = 0
    for step in range(steps):
        lr = lr_schedule_face(examples_seen, config.examples)
        poses = np.stack([sampler.sample(rng)[:FACE_POSE_DIMS] for _ in range(batch)])

        grad_total = [np.zeros_like(p.data) for p in params]
        loss_val = 0.0
        plain_val = 0.0
        masked_val = 0.0
        for start in range(0, batch, chunk):
            sub = poses[start:start + chunk]
            weight = len(sub) / batch
            teacher_cols = np.concatenate(
                [teacher.face_region(rest, p).data.reshape(4, n) for p in sub], axis=1
            )
            grid_tiled, mask_cols = chunk_consts[len(sub)]
            pose_cols = np.repeat((sub * model.pose_gain).T.astype(np.float32), n, axis=1)
            x = Tensor(np.concatenate([grid_tiled, pose_cols]), _check=False)
            target = Tensor(teacher_cols, _check=False)

            with Tape() as tape:
                student = squash01(siren_forward(model.mlp, x))
                loss, plain, masked = face_morpher_loss_terms(student, target, mask_cols)
            loss_val += weight * loss.item()
            plain_val += weight * plain.item()
            masked_val += weight * masked.item()
            grads = backward(tape, output_grad=np.float32(weight))
            for total, p in zip(grad_total, params):
                g = grads.get(p)
                if g is not None:
                    total += g
        _check_finite_loss(loss_val, step, "face morpher distillation")
        adam_step(params, grad_total, state, lr)

        examples_seen += batch
        if step % config.history_every == 0 or step == steps - 1:
            history.append(step, examples_seen, lr, loss_val, plain_val, masked_val)
            if progress is not None:
                progress(step, steps, loss_val)
    return model, history


# ---------------------------------------------------------------------------
# body rotator distillation


def distill_body_rotator(rest: Tensor, teacher: TeacherOracle, config: TrainConfig,
                         resolutions=(128, 256, 512), widths=(128, 96, 64),
                         w0_first: float = 30.0, w0_hidden: float = 1.0,
                         head_init_scale: float = 1.0, progress=None):
    """Train a body rotator against the teacher's formation tensors."""
    root = np.random.SeedSequence(config.seed)
    init_seq, pose_seq = root.spawn(2)
    model = build_body_rotator(resolutions=resolutions, widths=widths,
                               seed=init_seq, w0_first=w0_first, w0_hidden=w0_hidden,
                               head_init_scale=head_init_scale)
    if model.output_resolution != rest.shape[1]:
        raise ValueError(
            f"rest image {rest.shape} does not match rotator output "
            f"{model.output_resolution}"
        )
    sampler = make_pose_sampler(config.pose_source)
    rng = np.random.Generator(np.random.PCG64(pose_seq))
    schedule = build_phase_schedule(config.examples, config.phases)

    params = model.parameters()
    state = AdamState(params, beta1=config.beta1, beta2=config.beta2,
                      eps=config.eps, names=model.parameter_names())
    history = LossHistory([
        "step", "examples", "lr",
        "lam_flow", "lam_warped", "lam_direct", "lam_final",
        "loss", "flow", "warped", "direct", "final",
    ])

    batch = config.batch_size
    steps = -(-config.examples // batch)
    examples_seen = 0
    inv_batch = 1.0 / batch
    for step in range(steps):
        lr = lr_schedule_body(examples_seen, config.examples)
        weights = schedule.at(examples_seen)
        poses = [sampler.sample(rng) for _ in range(batch)]
        teacher_outs = [teacher.rotator_outputs(rest, p[FACE_POSE_DIMS:]) for p in poses]

        with Tape() as tape:
            total = None
            term_track = np.zeros(4)
            for p, t_out in zip(poses, teacher_outs):
                s_out = rotator_forward(model, rest, p[FACE_POSE_DIMS:])
                item_terms = [
                    ad.mean(ad.abs_(ad.sub(s_out.flow, t_out.flow))),
                    ad.mean(ad.abs_(ad.sub(s_out.warped, t_out.warped))),
                    ad.mean(ad.abs_(ad.sub(s_out.direct, t_out.direct))),
                    ad.mean(ad.abs_(ad.sub(s_out.final, t_out.final))),
                ]
                term_track += [t.item() for t in item_terms]
                item_loss = None
                for lam, term in zip(weights, item_terms):
                    piece = ad.scale(term, lam)
                    item_loss = piece if item_loss is None else ad.add(item_loss, piece)
                total = item_loss if total is None else ad.add(total, item_loss)
            loss = ad.scale(total, inv_batch)
        loss_val = loss.item()
        _check_finite_loss(loss_val, step, "body rotator distillation")
        grads = backward(tape)
        adam_step(params, grads, state, lr)

        examples_seen += batch
        if step % config.history_every == 0 or step == steps - 1:
            term_track *= inv_batch
            history.append(step, examples_seen, lr, *weights, loss_val, *term_track)
            if progress is not None:
                progress(step, steps, loss_val)
    return model, history


# ---------------------------------------------------------------------------
# held-out evaluation


def face_region_psnr(model: FaceMorpherStudent, teacher: TeacherOracle,
                     rest: Tensor, poses45: np.ndarray):
    values = []
    for pose in np.asarray(poses45):
        student = render_face_region(model, pose[:FACE_POSE_DIMS])
        target = teacher.face_region(rest, pose[:FACE_POSE_DIMS])
        values.append(psnr(student, target))
    return float(np.mean(values)), values


def rotator_final_psnr(model: BodyRotatorStudent, teacher: TeacherOracle,
                       rest: Tensor, poses45: np.ndarray):
    values = []
    for pose in np.asarray(poses45):
        student = rotator_forward(model, rest, pose[FACE_POSE_DIMS:])
        target = teacher.rotator_outputs(rest, pose[FACE_POSE_DIMS:])
        values.append(psnr(student.final, target.final))
    return float(np.mean(values)), values
