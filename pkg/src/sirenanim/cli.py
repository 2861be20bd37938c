"""Command-line interface: distill, render, eval, bench, serve."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sirenanim",
        description="Distill, render, evaluate, benchmark, and serve tiny avatar models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("distill", help="train both students against the synthetic teacher")
    p.add_argument("--config", required=True, help="avatar config YAML")
    p.add_argument("--out", required=True, help="output bundle path")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--examples", type=int, default=None,
                   help="override both students' run lengths")

    p = sub.add_parser("render", help="render one pose to a PNG")
    p.add_argument("--bundle", required=True)
    p.add_argument("--image", required=True, help="rest image PNG")
    p.add_argument("--pose", required=True,
                   help="45 comma-separated values, or a pose CSV (first row)")
    p.add_argument("--out", required=True, help="output PNG path")

    p = sub.add_parser("bench", help="time full-frame generation")
    p.add_argument("--bundle", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--report-dir", default=None,
                   help="write timing CSV and figure here")

    p = sub.add_parser("eval", help="mean held-out PSNR against the teacher oracle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--poses", required=True, help="pose CSV, 45 columns")
    p.add_argument("--config", default=None,
                   help="avatar config for teacher constants (defaults otherwise)")
    p.add_argument("--report-dir", default=None,
                   help="write per-pose CSV and figure here")

    p = sub.add_parser("serve", help="WebSocket frame service with the web UI")
    p.add_argument("--bundle", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    return parser


def _fail(message: str, code: int = 2):
    print(f"error: {message}", file=sys.stderr)
    raise SystemExit(code)


def _load_rest(path):
    from .image_ops import load_png

    try:
        return load_png(path)
    except FileNotFoundError:
        _fail(f"rest image not found: {path}")
    except ValueError as exc:
        _fail(str(exc))


def _load_bundle_checked(bundle_path, rest):
    from .bundle import BundleError, load_bundle

    try:
        return load_bundle(bundle_path, rest_image=rest)
    except FileNotFoundError:
        _fail(f"bundle not found: {bundle_path}")
    except BundleError as exc:
        _fail(str(exc))


def _parse_pose(spec: str) -> np.ndarray:
    from .distiller import POSE_DIMS, load_pose_csv

    if "," in spec and not Path(spec).exists():
        try:
            values = np.array([float(v) for v in spec.split(",")])
        except ValueError:
            _fail(f"cannot parse inline pose: {spec!r}")
        if values.shape != (POSE_DIMS,):
            _fail(f"inline pose needs {POSE_DIMS} values, got {len(values)}")
        return values
    try:
        return load_pose_csv(spec)[0]
    except (OSError, ValueError) as exc:
        _fail(f"cannot read pose file: {exc}")


def cmd_distill(args) -> int:
    from dataclasses import replace

    from .bundle import StudentBundle, image_fingerprint, save_bundle
    from .config import ConfigError, load_avatar_config
    from .distiller import (TrainConfig, distill_body_rotator, distill_face_morpher,
                            face_region_psnr, held_out_poses, rotator_final_psnr)
    from .face_morpher import load_face_mask
    from .plots import save_loss_figure
    from .synthetic_teacher import SyntheticTeacher

    try:
        cfg = load_avatar_config(args.config)
    except (FileNotFoundError, ConfigError) as exc:
        _fail(str(exc))
    rest = _load_rest(cfg.rest_image)
    try:
        cfg.crop.validate_inside(rest.shape[1], rest.shape[2])
        mask = load_face_mask(cfg.mask, cfg.crop) if cfg.mask else None
    except (FileNotFoundError, ValueError) as exc:
        _fail(str(exc))

    seed = cfg.training.seed if args.seed is None else args.seed
    face_examples = args.examples or cfg.face.examples
    body_examples = args.examples or cfg.body.examples
    teacher = SyntheticTeacher(cfg.crop, cfg.teacher)

    def train_config(examples):
        return TrainConfig(
            examples=examples, batch_size=cfg.training.batch_size, seed=seed,
            pose_source=cfg.training.pose_source,
            history_every=cfg.training.history_every,
        )

    print(f"distilling face morpher ({face_examples} examples)...", flush=True)
    face, face_hist = distill_face_morpher(
        rest, mask, cfg.crop, teacher, train_config(face_examples),
        hidden=cfg.face.hidden, w0_first=cfg.face.w0_first, w0_hidden=cfg.face.w0_hidden,
        pose_gain=cfg.face.pose_gain,
    )
    print(f"distilling body rotator ({body_examples} examples)...", flush=True)
    body, body_hist = distill_body_rotator(
        rest, teacher, train_config(body_examples),
        resolutions=cfg.body.resolutions, widths=cfg.body.widths,
        w0_first=cfg.body.w0_first, w0_hidden=cfg.body.w0_hidden,
        head_init_scale=cfg.body.head_init_scale,
    )

    bundle = StudentBundle(
        face=face, body=body, frame_size=(rest.shape[1], rest.shape[2]),
        rest_hash=image_fingerprint(rest),
        face_w0=(cfg.face.w0_first, cfg.face.w0_hidden),
        body_w0=(cfg.body.w0_first, cfg.body.w0_hidden),
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_bundle(out, bundle)
    face_hist.save_csv(out.with_suffix(out.suffix + ".face_loss.csv"))
    body_hist.save_csv(out.with_suffix(out.suffix + ".body_loss.csv"))
    save_loss_figure(face_hist, out.with_suffix(out.suffix + ".face_loss.png"),
                     title="Face morpher loss")
    save_loss_figure(body_hist, out.with_suffix(out.suffix + ".body_loss.png"),
                     title="Body rotator loss")

    poses = held_out_poses(100)
    face_psnr, _ = face_region_psnr(face, teacher, rest, poses)
    body_psnr, _ = rotator_final_psnr(body, teacher, rest, poses)
    print(f"held-out PSNR: face region {face_psnr:.2f} dB, "
          f"body rotator {body_psnr:.2f} dB")
    print(f"bundle written to {out}")
    return 0


def cmd_render(args) -> int:
    from .image_ops import save_png
    from .runtime import AvatarRenderer

    rest = _load_rest(args.image)
    bundle = _load_bundle_checked(args.bundle, rest)
    pose = _parse_pose(args.pose)
    renderer = AvatarRenderer(bundle, rest)
    frame = renderer.render(np.clip(pose, -1.0, 1.0))
    save_png(args.out, frame)
    print(f"wrote {args.out}")
    return 0


def cmd_bench(args) -> int:
    from .distiller import held_out_poses
    from .runtime import AvatarRenderer, benchmark_renderer

    rest = _load_rest(args.image)
    bundle = _load_bundle_checked(args.bundle, rest)
    renderer = AvatarRenderer(bundle, rest)
    poses = held_out_poses(64)

    single = benchmark_renderer(renderer.render, poses, iterations=args.iters, threads=1)
    print(single.format("single thread"))
    multi = benchmark_renderer(renderer.render, poses, iterations=args.iters)
    print(multi.format("max threads"))

    if args.report_dir:
        from .plots import save_bench_figure

        report = Path(args.report_dir)
        report.mkdir(parents=True, exist_ok=True)
        with open(report / "bench.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "single_thread_ms", "max_threads_ms"])
            for i, (a, b) in enumerate(zip(single.samples_ms, multi.samples_ms)):
                writer.writerow([i, f"{a:.6f}", f"{b:.6f}"])
        save_bench_figure(multi.samples_ms, report / "bench.png")
        print(f"report written to {report}")
    return 0


def cmd_eval(args) -> int:
    from .config import ConfigError, load_avatar_config
    from .distiller import load_pose_csv
    from .face_morpher import composite_face, FACE_POSE_DIMS
    from .runtime import AvatarRenderer, evaluate_psnr
    from .synthetic_teacher import SyntheticTeacher

    rest = _load_rest(args.image)
    bundle = _load_bundle_checked(args.bundle, rest)
    try:
        poses = load_pose_csv(args.poses)
    except (OSError, ValueError) as exc:
        _fail(str(exc))

    teacher_params = None
    if args.config:
        try:
            teacher_params = load_avatar_config(args.config).teacher
        except (FileNotFoundError, ConfigError) as exc:
            _fail(str(exc))
    teacher = SyntheticTeacher(bundle.crop, teacher_params)
    renderer = AvatarRenderer(bundle, rest)

    def teacher_render(pose):
        face = teacher.face_region(rest, pose[:FACE_POSE_DIMS])
        frame = composite_face(rest, face, bundle.crop)
        return teacher.rotator_outputs(frame, pose[FACE_POSE_DIMS:]).final

    mean, rows = evaluate_psnr(renderer.render, teacher_render, poses)
    print(f"mean PSNR over {len(rows)} poses: {mean:.3f} dB")

    if args.report_dir:
        from .plots import save_psnr_figure

        report = Path(args.report_dir)
        report.mkdir(parents=True, exist_ok=True)
        with open(report / "eval.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["pose", "psnr_db"])
            writer.writerows(rows)
        save_psnr_figure([v for _, v in rows], report / "eval.png")
        print(f"report written to {report}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .runtime import AvatarRenderer
    from .server import create_app

    rest = _load_rest(args.image)
    bundle = _load_bundle_checked(args.bundle, rest)
    app = create_app(AvatarRenderer(bundle, rest))
    print(f"serving avatar on http://{args.host}:{args.port}/ (ws endpoint /ws)")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "distill": cmd_distill,
        "render": cmd_render,
        "bench": cmd_bench,
        "eval": cmd_eval,
        "serve": cmd_serve,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
