"""Avatar configuration file: everything a distillation run needs.

YAML, human-readable, with paths resolved relative to the config file:

    rest_image: character.png
    mask: mask.png            # optional; omit for an all-ones organ mask
    crop: {x: 192, y: 96, width: 128, height: 128}
    face:
      hidden: 128
      examples: 1000000
    body:
      resolutions: [128, 256, 512]
      widths: [128, 96, 64]
      examples: 1500000
    training:
      batch_size: 8
      seed: 0
      pose_source: synthetic  # or a pose CSV path
    teacher:                  # synthetic teacher constants (all optional)
      blur_sigma: 1.5
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields as dataclass_fields
from pathlib import Path

import yaml

from .face_morpher import CropRect
from .synthetic_teacher import TeacherParams

__all__ = ["AvatarConfig", "FaceSettings", "BodySettings", "TrainingSettings",
           "load_avatar_config", "ConfigError"]


class ConfigError(ValueError):
    pass


@dataclass
class FaceSettings:
    hidden: int = 128
    w0_first: float = 30.0
    w0_hidden: float = 1.0
    pose_gain: float = 1.0
    examples: int = 1_000_000


@dataclass
class BodySettings:
    resolutions: tuple[int, int, int] = (128, 256, 512)
    widths: tuple[int, int, int] = (128, 96, 64)
    w0_first: float = 30.0
    w0_hidden: float = 1.0
    head_init_scale: float = 1.0
    examples: int = 1_500_000


@dataclass
class TrainingSettings:
    batch_size: int = 8
    seed: int = 0
    pose_source: str = "synthetic"
    history_every: int = 25


@dataclass
class AvatarConfig:
    rest_image: Path
    crop: CropRect
    mask: Path | None = None
    face: FaceSettings = field(default_factory=FaceSettings)
    body: BodySettings = field(default_factory=BodySettings)
    training: TrainingSettings = field(default_factory=TrainingSettings)
    teacher: TeacherParams = field(default_factory=TeacherParams)


def _build(cls, mapping, where):
    if mapping is None:
        return cls()
    if not isinstance(mapping, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(mapping).__name__}")
    known = {f.name for f in dataclass_fields(cls)}
    unknown = set(mapping) - known
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kwargs = dict(mapping)
    for key in ("resolutions", "widths"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    return cls(**kwargs)


def load_avatar_config(path) -> AvatarConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise FileNotFoundError(f"no such config file: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a mapping")

    if "rest_image" not in raw:
        raise ConfigError(f"{path}: missing required key 'rest_image'")
    if "crop" not in raw:
        raise ConfigError(f"{path}: missing required key 'crop'")
    crop_raw = raw["crop"]
    try:
        crop = CropRect(
            x=int(crop_raw["x"]), y=int(crop_raw["y"]),
            width=int(crop_raw.get("width", 128)), height=int(crop_raw.get("height", 128)),
        )
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"{path}: crop must map x/y/width/height: {exc}")

    base = path.parent
    rest = base / raw["rest_image"]
    mask = (base / raw["mask"]) if raw.get("mask") else None

    allowed = {"rest_image", "mask", "crop", "face", "body", "training", "teacher"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown top-level keys {sorted(unknown)}")

    return AvatarConfig(
        rest_image=rest,
        crop=crop,
        mask=mask,
        face=_build(FaceSettings, raw.get("face"), f"{path}: face"),
        body=_build(BodySettings, raw.get("body"), f"{path}: body"),
        training=_build(TrainingSettings, raw.get("training"), f"{path}: training"),
        teacher=_build(TeacherParams, raw.get("teacher"), f"{path}: teacher"),
    )
