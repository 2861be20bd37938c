"""Avatar config parsing."""

import pytest

from sirenanim.config import ConfigError, load_avatar_config


def _write(tmp_path, text):
    path = tmp_path / "avatar.yaml"
    path.write_text(text)
    return path


def test_minimal_config_defaults(tmp_path):
    cfg = load_avatar_config(_write(tmp_path, """
rest_image: char.png
crop: {x: 192, y: 96}
"""))
    assert cfg.rest_image == tmp_path / "char.png"
    assert cfg.crop.width == 128 and cfg.crop.height == 128
    assert cfg.mask is None
    assert cfg.face.hidden == 128
    assert cfg.body.resolutions == (128, 256, 512)
    assert cfg.body.widths == (128, 96, 64)
    assert cfg.training.batch_size == 8
    assert cfg.teacher.blur_sigma == 1.5


def test_full_config_round_trip(tmp_path):
    cfg = load_avatar_config(_write(tmp_path, """
rest_image: char.png
mask: mask.png
crop: {x: 8, y: 8, width: 16, height: 16}
face:
  hidden: 64
  examples: 20000
body:
  resolutions: [16, 32, 64]
  widths: [32, 24, 16]
  examples: 20000
training:
  batch_size: 4
  seed: 42
teacher:
  blur_sigma: 2.0
  max_angle: 0.1
"""))
    assert cfg.mask == tmp_path / "mask.png"
    assert cfg.crop.width == 16
    assert cfg.face.hidden == 64
    assert cfg.body.resolutions == (16, 32, 64)
    assert cfg.training.seed == 42
    assert cfg.teacher.blur_sigma == 2.0


def test_missing_required_keys(tmp_path):
    with pytest.raises(ConfigError, match="rest_image"):
        load_avatar_config(_write(tmp_path, "crop: {x: 0, y: 0}"))
    with pytest.raises(ConfigError, match="crop"):
        load_avatar_config(_write(tmp_path, "rest_image: a.png"))


def test_unknown_keys_rejected(tmp_path):
    with pytest.raises(ConfigError, match="unknown"):
        load_avatar_config(_write(tmp_path, """
rest_image: a.png
crop: {x: 0, y: 0}
fase:
  hidden: 3
"""))
    with pytest.raises(ConfigError, match="unknown"):
        load_avatar_config(_write(tmp_path, """
rest_image: a.png
crop: {x: 0, y: 0}
face:
  hiden: 3
"""))


def test_missing_file_raises(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_avatar_config(tmp_path / "nope.yaml")


def test_invalid_yaml_raises(tmp_path):
    with pytest.raises(ConfigError, match="YAML"):
        load_avatar_config(_write(tmp_path, "rest_image: [unclosed"))
