"""Deployable avatar model file: both students plus avatar metadata.

Layout (all integers little-endian):

    8 bytes   magic "THA4STUD"
    u32       format version
    u32       header length
    ...       header JSON (frame size, crop, rest-image hash, architecture)
    ...       f32 parameter payload: face layers then body layers, each
              layer as row-major weight then bias

The header's architecture descriptor fully determines the payload length;
loading verifies it and, when the rest image is supplied, the image hash.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor
from .body_rotator import BodyRotatorStudent, build_body_rotator
from .face_morpher import CropRect, FaceMorpherStudent, build_face_morpher
from .image_ops import to_rgba8

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "StudentBundle",
    "BundleError",
    "BadMagicError",
    "VersionMismatchError",
    "TruncatedPayloadError",
    "RestImageMismatchError",
    "image_fingerprint",
    "save_bundle",
    "load_bundle",
]

MAGIC = b"THA4STUD"
FORMAT_VERSION = 1


class BundleError(ValueError):
    pass


class BadMagicError(BundleError):
    pass


class VersionMismatchError(BundleError):
    pass


class TruncatedPayloadError(BundleError):
    pass


class RestImageMismatchError(BundleError):
    pass


def image_fingerprint(image: Tensor) -> str:
    """SHA-256 over the image's quantized RGBA8 bytes plus its dimensions."""
    arr = to_rgba8(image)
    h = hashlib.sha256()
    h.update(struct.pack("<HH", arr.shape[1], arr.shape[0]))
    h.update(arr.tobytes())
    return h.hexdigest()


@dataclass
class StudentBundle:
    face: FaceMorpherStudent
    body: BodyRotatorStudent
    frame_size: tuple[int, int]  # (height, width)
    rest_hash: str
    face_w0: tuple[float, float] = (30.0, 1.0)
    body_w0: tuple[float, float] = (30.0, 1.0)

    @property
    def crop(self) -> CropRect:
        return self.face.crop

    def header(self) -> dict:
        c = self.face.crop
        return {
            "frame": list(self.frame_size),
            "crop": [c.x, c.y, c.width, c.height],
            "rest_sha256": self.rest_hash,
            "face": {
                "hidden": self.face.mlp.layers[0].fan_out,
                "w0_first": self.face_w0[0],
                "w0_hidden": self.face_w0[1],
                "pose_gain": self.face.pose_gain,
            },
            "body": {
                "resolutions": list(self.body.resolutions),
                "widths": list(self.body.widths),
                "w0_first": self.body_w0[0],
                "w0_hidden": self.body_w0[1],
            },
        }

    def param_count(self) -> int:
        return self.face.param_count() + self.body.param_count()


def _all_params(bundle: StudentBundle):
    return bundle.face.parameters() + bundle.body.parameters()


def save_bundle(path, bundle: StudentBundle):
    header = json.dumps(bundle.header(), sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(header)))
        fh.write(header)
        for p in _all_params(bundle):
            fh.write(np.ascontiguousarray(p.data, dtype="<f4").tobytes())


def load_bundle(path, rest_image: Tensor | None = None) -> StudentBundle:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + 8 or blob[:len(MAGIC)] != MAGIC:
        raise BadMagicError(f"{path}: not a student bundle (bad magic)")
    version, header_len = struct.unpack_from("<II", blob, len(MAGIC))
    if version != FORMAT_VERSION:
        raise VersionMismatchError(
            f"{path}: bundle format version {version}, expected {FORMAT_VERSION}"
        )
    header_start = len(MAGIC) + 8
    if len(blob) < header_start + header_len:
        raise TruncatedPayloadError(f"{path}: truncated header")
    try:
        header = json.loads(blob[header_start:header_start + header_len])
        frame = tuple(header["frame"])
        cx, cy, cw, ch = header["crop"]
        face_h = header["face"]
        body_h = header["body"]
    except (ValueError, KeyError) as exc:
        raise BundleError(f"{path}: malformed bundle header: {exc}")

    crop = CropRect(x=cx, y=cy, width=cw, height=ch)
    face = build_face_morpher(crop, hidden=face_h["hidden"], seed=0,
                              w0_first=face_h["w0_first"], w0_hidden=face_h["w0_hidden"],
                              pose_gain=face_h.get("pose_gain", 1.0))
    body = build_body_rotator(resolutions=body_h["resolutions"], widths=body_h["widths"],
                              seed=0, w0_first=body_h["w0_first"], w0_hidden=body_h["w0_hidden"])
    bundle = StudentBundle(
        face=face, body=body, frame_size=(int(frame[0]), int(frame[1])),
        rest_hash=header["rest_sha256"],
        face_w0=(face_h["w0_first"], face_h["w0_hidden"]),
        body_w0=(body_h["w0_first"], body_h["w0_hidden"]),
    )

    payload = blob[header_start + header_len:]
    expected = bundle.param_count() * 4
    if len(payload) < expected:
        raise TruncatedPayloadError(
            f"{path}: payload holds {len(payload)} bytes, descriptor needs {expected}"
        )
    if len(payload) > expected:
        raise BundleError(f"{path}: {len(payload) - expected} unexpected trailing bytes")
    offset = 0
    for p in _all_params(bundle):
        count = p.size
        arr = np.frombuffer(payload, dtype="<f4", count=count, offset=offset)
        p.data = _frozen(arr.reshape(p.shape).astype(np.float32))
        offset += count * 4

    if rest_image is not None:
        actual = image_fingerprint(rest_image)
        if actual != bundle.rest_hash:
            raise RestImageMismatchError(
                f"{path}: bundle was distilled for a different rest image "
                f"(hash {bundle.rest_hash[:12]}..., supplied image {actual[:12]}...)"
            )
    return bundle


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr
