"""Full-frame rendering from a loaded bundle, evaluation, and benchmarking."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor
from .body_rotator import rotator_forward
from .bundle import StudentBundle
from .distiller import POSE_DIMS
from .face_morpher import FACE_POSE_DIMS, composite_face, render_face_region
from .image_ops import to_rgba8
from .metrics import psnr

__all__ = ["AvatarRenderer", "evaluate_psnr", "benchmark_renderer", "BenchReport"]


class AvatarRenderer:
    """Pose -> final frame for one avatar; weights are frozen and shared."""

    def __init__(self, bundle: StudentBundle, rest: Tensor):
        if rest.shape[1:] != bundle.frame_size:
            raise ValueError(
                f"rest image {rest.shape[1:]} does not match bundle frame "
                f"{bundle.frame_size}"
            )
        self.bundle = bundle
        self.rest = rest

    @property
    def resolution(self) -> int:
        return self.bundle.frame_size[0]

    def render(self, pose: np.ndarray) -> Tensor:
        pose = np.asarray(pose, dtype=np.float64).ravel()
        if pose.shape != (POSE_DIMS,):
            raise ValueError(f"pose must have {POSE_DIMS} components, got {pose.shape}")
        face = render_face_region(self.bundle.face, pose[:FACE_POSE_DIMS])
        frame = composite_face(self.rest, face, self.bundle.crop)
        out = rotator_forward(self.bundle.body, frame, pose[FACE_POSE_DIMS:])
        return out.final

    def render_rgba8(self, pose: np.ndarray) -> np.ndarray:
        return to_rgba8(self.render(pose))


def evaluate_psnr(student_render, teacher_render, poses: np.ndarray):
    """Per-pose PSNR between two pose->image callables; returns (mean, rows)."""
    poses = np.asarray(poses)
    if poses.size == 0:
        raise ValueError("no poses to evaluate")
    rows = []
    for i, pose in enumerate(poses):
        value = psnr(student_render(pose), teacher_render(pose))
        rows.append((i, value))
    mean = float(np.mean([v for _, v in rows]))
    return mean, rows


@dataclass
class BenchReport:
    iterations: int
    warmup: int
    threads: int
    mean_ms: float
    median_ms: float
    p95_ms: float
    samples_ms: np.ndarray

    def format(self, label: str = "") -> str:
        head = f"frame time over {self.iterations} iterations"
        if label:
            head = f"{label}: {head}"
        return (
            f"{head} ({self.threads} thread{'s' if self.threads != 1 else ''}, "
            f"{self.warmup} warm-up frames)\n"
            f"  mean   {self.mean_ms:8.3f} ms\n"
            f"  median {self.median_ms:8.3f} ms\n"
            f"  p95    {self.p95_ms:8.3f} ms"
        )


def benchmark_renderer(render, poses: np.ndarray, iterations: int = 1000,
                       warmup: int = 20, threads: int | None = None) -> BenchReport:
    """Wall-clock the render callable; timing excludes encoding and I/O."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    poses = np.asarray(poses)
    from threadpoolctl import threadpool_limits

    if threads is None:
        import os

        threads = os.cpu_count() or 1
    samples = np.empty(iterations)
    with threadpool_limits(limits=threads):
        for i in range(warmup):
            render(poses[i % len(poses)])
        for i in range(iterations):
            pose = poses[i % len(poses)]
            t0 = time.perf_counter()
            render(pose)
            samples[i] = time.perf_counter() - t0
    ms = samples * 1e3
    return BenchReport(
        iterations=iterations,
        warmup=warmup,
        threads=threads,
        mean_ms=float(ms.mean()),
        median_ms=float(np.median(ms)),
        p95_ms=float(np.percentile(ms, 95)),
        samples_ms=ms,
    )
