"""Image formation primitives: warping, blending, resampling, PNG I/O.

All images are channel-major planar float tensors (C, H, W) with values in
[0, 1]. Normalized coordinates follow two fixed conventions that the tests
pin down bit-exactly:

* sampling (align-corners-true): pixel (0,0) center maps to (-1,-1) and
  pixel (W-1,H-1) center to (+1,+1); a 1x1 image maps to (0,0);
* 2x upsampling (align-corners-false): destination j samples source
  j/2 - 0.25, clamped to the edge.

Coordinate channel 0 is x (along width), channel 1 is y (along height).
Out-of-range sample coordinates clamp to the edge. Appearance flows are
per-pixel offsets added to the identity grid, so a zero flow is the
identity warp.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .autodiff import Tensor, record, register_op, _wrap

__all__ = [
    "identity_grid",
    "bilinear_sample",
    "warp",
    "alpha_blend",
    "bilinear_upsample_2x",
    "load_png",
    "save_png",
    "PngFormatError",
]

OP_BILINEAR_SAMPLE = register_op("bilinear_sample")
OP_BILINEAR_UPSAMPLE = register_op("bilinear_upsample_2x")
OP_BOX_DOWNSAMPLE = register_op("box_downsample_2x")
OP_ALPHA_BLEND = register_op("alpha_blend")

# Coordinates this close to a pixel center (in pixel units) snap onto it,
# keeping the identity warp bit-exact despite normalized-coordinate round
# trips. f32 coordinates carry ~1e-5 px of roundoff at 512 px, f64 ~1e-13.
_SNAP_F32 = 1e-4
_SNAP_F64 = 1e-9


def identity_grid(height: int, width: int, dtype=np.float32) -> Tensor:
    """Normalized sampling grid, shape (2, height, width)."""
    if height < 1 or width < 1:
        raise ValueError("grid dimensions must be >= 1")
    if width == 1:
        xs = np.zeros(width, dtype=np.float64)
    else:
        xs = (2.0 * np.arange(width, dtype=np.float64) - (width - 1)) / (width - 1)
    if height == 1:
        ys = np.zeros(height, dtype=np.float64)
    else:
        ys = (2.0 * np.arange(height, dtype=np.float64) - (height - 1)) / (height - 1)
    gx = np.broadcast_to(xs, (height, width))
    gy = np.broadcast_to(ys[:, None], (height, width))
    return Tensor(np.stack([gx, gy]).astype(dtype), _check=False)


def _sample_coeffs(px, py, h, w, snap):
    """Corner indices and lerp weights for clamped bilinear sampling."""
    inx = (px >= 0.0) & (px <= w - 1.0)
    iny = (py >= 0.0) & (py <= h - 1.0)
    pxc = np.clip(px, 0.0, float(w - 1))
    pyc = np.clip(py, 0.0, float(h - 1))
    rx = np.rint(pxc)
    ry = np.rint(pyc)
    pxc = np.where(np.abs(pxc - rx) < snap, rx, pxc)
    pyc = np.where(np.abs(pyc - ry) < snap, ry, pyc)
    x0 = np.floor(pxc).astype(np.int64)
    y0 = np.floor(pyc).astype(np.int64)
    wx = pxc - x0
    wy = pyc - y0
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    return x0, x1, y0, y1, wx, wy, inx, iny


def bilinear_sample(image: Tensor, coords: Tensor) -> Tensor:
    """Sample `image` (C,H,W) at normalized `coords` (2,H',W')."""
    if coords.data.ndim != 3 or coords.shape[0] != 2:
        raise ValueError(f"coords must have shape (2,H,W), got {coords.shape}")
    if image.data.ndim != 3:
        raise ValueError(f"image must have shape (C,H,W), got {image.shape}")
    c, h, w = image.shape

    def fwd(img, crd):
        snap = _SNAP_F32 if crd.dtype == np.float32 else _SNAP_F64
        px = (crd[0].astype(np.float64) + 1.0) * ((w - 1) / 2.0)
        py = (crd[1].astype(np.float64) + 1.0) * ((h - 1) / 2.0)
        x0, x1, y0, y1, wx, wy, _, _ = _sample_coeffs(px, py, h, w, snap)
        v00 = img[:, y0, x0]
        v01 = img[:, y0, x1]
        v10 = img[:, y1, x0]
        v11 = img[:, y1, x1]
        top = v00 + wx * (v01 - v00)
        bot = v10 + wx * (v11 - v10)
        return (top + wy * (bot - top)).astype(img.dtype, copy=False)

    def bwd_builder(out):
        def bwd(g):
            img = image.data
            crd = coords.data
            snap = _SNAP_F32 if crd.dtype == np.float32 else _SNAP_F64
            px = (crd[0].astype(np.float64) + 1.0) * ((w - 1) / 2.0)
            py = (crd[1].astype(np.float64) + 1.0) * ((h - 1) / 2.0)
            x0, x1, y0, y1, wx, wy, inx, iny = _sample_coeffs(px, py, h, w, snap)
            i00 = (y0 * w + x0).ravel()
            i01 = (y0 * w + x1).ravel()
            i10 = (y1 * w + x0).ravel()
            i11 = (y1 * w + x1).ravel()
            w00 = ((1.0 - wx) * (1.0 - wy)).ravel()
            w01 = (wx * (1.0 - wy)).ravel()
            w10 = ((1.0 - wx) * wy).ravel()
            w11 = (wx * wy).ravel()
            gimg = np.empty((c, h * w), dtype=g.dtype)
            for ch in range(c):
                gc = g[ch].ravel()
                acc = np.bincount(i00, weights=gc * w00, minlength=h * w)
                acc += np.bincount(i01, weights=gc * w01, minlength=h * w)
                acc += np.bincount(i10, weights=gc * w10, minlength=h * w)
                acc += np.bincount(i11, weights=gc * w11, minlength=h * w)
                gimg[ch] = acc
            v00 = img[:, y0, x0]
            v01 = img[:, y0, x1]
            v10 = img[:, y1, x0]
            v11 = img[:, y1, x1]
            dwx = (1.0 - wy) * (v01 - v00) + wy * (v11 - v10)
            dwy = (v10 + wx * (v11 - v10)) - (v00 + wx * (v01 - v00))
            gx = (g * dwx).sum(axis=0) * inx * ((w - 1) / 2.0)
            gy = (g * dwy).sum(axis=0) * iny * ((h - 1) / 2.0)
            return gimg.reshape(c, h, w), np.stack([gx, gy]).astype(g.dtype, copy=False)

        return bwd

    return record(OP_BILINEAR_SAMPLE, (image, coords), fwd, bwd_builder)


def warp(image: Tensor, flow: Tensor) -> Tensor:
    """Warp `image` by an appearance flow of per-pixel coordinate offsets."""
    if flow.data.ndim != 3 or flow.shape[0] != 2:
        raise ValueError(f"flow must have shape (2,H,W), got {flow.shape}")
    if flow.shape[1:] != image.shape[1:]:
        raise ValueError(f"flow size {flow.shape[1:]} does not match image {image.shape[1:]}")
    from .autodiff import add

    grid = identity_grid(flow.shape[1], flow.shape[2], dtype=flow.data.dtype)
    return bilinear_sample(image, add(grid, flow))


def alpha_blend(direct: Tensor, warped: Tensor, alpha: Tensor) -> Tensor:
    """Per-pixel convex combination: alpha*direct + (1-alpha)*warped."""
    if direct.shape != warped.shape:
        raise ValueError(f"blend size mismatch: {direct.shape} vs {warped.shape}")
    if alpha.data.ndim != 3 or alpha.shape[0] != 1 or alpha.shape[1:] != direct.shape[1:]:
        raise ValueError(f"alpha must have shape (1,H,W) matching images, got {alpha.shape}")

    def fwd(d, wp, a):
        return a * d + (1.0 - a) * wp

    def bwd_builder(out):
        def bwd(g):
            a = alpha.data
            d = direct.data
            wp = warped.data
            return (
                g * a,
                g * (1.0 - a),
                (g * (d - wp)).sum(axis=0, keepdims=True),
            )

        return bwd

    return record(OP_ALPHA_BLEND, (direct, warped, alpha), fwd, bwd_builder)


def _upsample_coeffs(n: int):
    """Per-axis source indices and weights for 2x align-corners-false."""
    dst = np.arange(2 * n, dtype=np.float64)
    src = np.clip(dst / 2.0 - 0.25, 0.0, float(n - 1))
    i0 = np.floor(src).astype(np.int64)
    w = src - i0
    i1 = np.minimum(i0 + 1, n - 1)
    return i0, i1, w


_UPSAMPLE_MATRICES: dict = {}


def _upsample_matrix(n: int) -> np.ndarray:
    """(2n, n) interpolation matrix; used for the backward transpose."""
    mat = _UPSAMPLE_MATRICES.get(n)
    if mat is None:
        i0, i1, w = _upsample_coeffs(n)
        mat = np.zeros((2 * n, n))
        rows = np.arange(2 * n)
        np.add.at(mat, (rows, i0), 1.0 - w)
        np.add.at(mat, (rows, i1), w)
        _UPSAMPLE_MATRICES[n] = mat
    return mat


def bilinear_upsample_2x(t: Tensor) -> Tensor:
    """Double both spatial dimensions of a (C,H,W) tensor."""
    if t.data.ndim != 3:
        raise ValueError(f"expected (C,H,W), got {t.shape}")
    _, h, w = t.shape
    yi0, yi1, wy = _upsample_coeffs(h)
    xi0, xi1, wx = _upsample_coeffs(w)

    def fwd(x):
        # lerp form keeps constant inputs bit-exact
        wyc = wy.astype(x.dtype)[None, :, None]
        rows = x[:, yi0, :] + wyc * (x[:, yi1, :] - x[:, yi0, :])
        wxc = wx.astype(x.dtype)[None, None, :]
        return rows[:, :, xi0] + wxc * (rows[:, :, xi1] - rows[:, :, xi0])

    def bwd_builder(out):
        def bwd(g):
            # transpose of the same linear map, as two dense matmuls
            uy = _upsample_matrix(h).astype(g.dtype)
            ux = _upsample_matrix(w).astype(g.dtype)
            return (np.matmul(np.matmul(uy.T, g), ux),)

        return bwd

    return record(OP_BILINEAR_UPSAMPLE, (t,), fwd, bwd_builder)


def box_downsample_2x(t: Tensor) -> Tensor:
    """Halve both spatial dimensions by averaging 2x2 blocks."""
    if t.data.ndim != 3:
        raise ValueError(f"expected (C,H,W), got {t.shape}")
    c, h, w = t.shape
    if h % 2 or w % 2:
        raise ValueError(f"spatial size {h}x{w} must be even")

    def fwd(x):
        q = x.dtype.type(0.25)
        return (x[:, 0::2, 0::2] + x[:, 0::2, 1::2] + x[:, 1::2, 0::2] + x[:, 1::2, 1::2]) * q

    def bwd_builder(out):
        def bwd(g):
            q = g.dtype.type(0.25)
            return (np.repeat(np.repeat(g * q, 2, axis=1), 2, axis=2),)

        return bwd

    return record(OP_BOX_DOWNSAMPLE, (t,), fwd, bwd_builder)


class PngFormatError(ValueError):
    """Raised for PNG files outside the 8-bit RGBA contract."""


def load_png(path) -> Tensor:
    """Load an 8-bit RGBA PNG as a (4,H,W) float tensor, scalar = byte/255."""
    try:
        img = Image.open(path)
    except FileNotFoundError:
        raise FileNotFoundError(f"no such image file: {path}")
    with img:
        if img.format != "PNG":
            raise PngFormatError(f"{path}: expected a PNG file, got {img.format}")
        if img.mode != "RGBA":
            raise PngFormatError(
                f"{path}: expected 8-bit RGBA, got mode {img.mode}; "
                "convert the image to straight-alpha RGBA first"
            )
        arr = np.asarray(img, dtype=np.uint8)
    planes = arr.astype(np.float32).transpose(2, 0, 1) / np.float32(255.0)
    return Tensor(planes, _check=False)


def save_png(path, image: Tensor):
    """Save a (4,H,W) float tensor in [0,1] as an 8-bit RGBA PNG."""
    if image.data.ndim != 3 or image.shape[0] != 4:
        raise ValueError(f"expected a (4,H,W) image, got {image.shape}")
    arr = np.clip(image.data, 0.0, 1.0)
    bytes_hwc = np.rint(arr * 255.0).astype(np.uint8).transpose(1, 2, 0)
    Image.fromarray(bytes_hwc, mode="RGBA").save(path, format="PNG")


def to_rgba8(image: Tensor) -> np.ndarray:
    """Quantize a (4,H,W) float image to (H,W,4) uint8."""
    arr = np.clip(image.data, 0.0, 1.0)
    return np.rint(arr * 255.0).astype(np.uint8).transpose(1, 2, 0)
