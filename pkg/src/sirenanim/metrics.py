"""Image quality metrics: peak signal-to-noise ratio and structural similarity."""

from __future__ import annotations

import math

import numpy as np

from .autodiff import Tensor

__all__ = ["psnr", "ssim"]

_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


def _as_array(img) -> np.ndarray:
    return img.data if isinstance(img, Tensor) else np.asarray(img)


def psnr(i1, i2, max_value: float = 1.0) -> float:
    """10*log10(max^2 / MSE); identical images report +inf."""
    a = _as_array(i1).astype(np.float64)
    b = _as_array(i2).astype(np.float64)
    if a.shape != b.shape:
        raise ValueError(f"psnr shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(max_value * max_value / mse)


def _to_gray(arr: np.ndarray) -> np.ndarray:
    if arr.ndim == 2:
        return arr
    if arr.ndim == 3:
        if arr.shape[0] == 1:
            return arr[0]
        return arr[:3].mean(axis=0)
    raise ValueError(f"cannot grayscale shape {arr.shape}")


def _gaussian_window() -> np.ndarray:
    half = (_SSIM_WINDOW - 1) / 2.0
    x = np.arange(_SSIM_WINDOW, dtype=np.float64) - half
    g = np.exp(-(x * x) / (2.0 * _SSIM_SIGMA * _SSIM_SIGMA))
    k = np.outer(g, g)
    return k / k.sum()


def _windowed_mean(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    view = np.lib.stride_tricks.sliding_window_view(img, kernel.shape)
    return np.einsum("ijkl,kl->ij", view, kernel, optimize=True)


def ssim(i1, i2) -> float:
    """Mean local structural similarity, Gaussian-weighted 11x11 windows.

    Inputs are converted to grayscale as the channel mean of RGB; images
    must be at least as large as the window.
    """
    a = _to_gray(_as_array(i1).astype(np.float64))
    b = _to_gray(_as_array(i2).astype(np.float64))
    if a.shape != b.shape:
        raise ValueError(f"ssim shape mismatch: {a.shape} vs {b.shape}")
    if min(a.shape) < _SSIM_WINDOW:
        raise ValueError(
            f"image {a.shape} smaller than the {_SSIM_WINDOW}x{_SSIM_WINDOW} window"
        )
    kernel = _gaussian_window()
    mu1 = _windowed_mean(a, kernel)
    mu2 = _windowed_mean(b, kernel)
    var1 = _windowed_mean(a * a, kernel) - mu1 * mu1
    var2 = _windowed_mean(b * b, kernel) - mu2 * mu2
    cov = _windowed_mean(a * b, kernel) - mu1 * mu2
    c1 = _SSIM_K1 * _SSIM_K1
    c2 = _SSIM_K2 * _SSIM_K2
    num = (2.0 * mu1 * mu2 + c1) * (2.0 * cov + c2)
    den = (mu1 * mu1 + mu2 * mu2 + c1) * (var1 + var2 + c2)
    return float((num / den).mean())
