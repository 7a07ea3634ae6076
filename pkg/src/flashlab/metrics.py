"""PSNR and SSIM reference implementations."""

from __future__ import annotations

import numpy as np

from . import imgcore

PSNR_CAP_DB = 99.0  # reported when MSE is exactly zero

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def psnr(x: np.ndarray, y: np.ndarray, peak: float = 1.0) -> float:
    """10*log10(peak^2 / MSE); exact match reports the 99 dB cap."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"psnr: shape mismatch {x.shape} vs {y.shape}")
    mse = np.mean((x - y) ** 2)
    if mse == 0.0:
        return PSNR_CAP_DB
    return float(10.0 * np.log10(peak * peak / mse))


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    r = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(r * r) / (2.0 * sigma * sigma))
    w = np.outer(g, g)
    return w / w.sum()


def _to_luma(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 3 and img.shape[2] == 3:
        img = imgcore.luminance(np.clip(img, 0.0, 1.0).astype(np.float32))
    elif img.ndim == 3:
        img = img[:, :, 0]
    return np.clip(img, 0.0, 1.0)


def ssim(x: np.ndarray, y: np.ndarray, peak: float = 1.0) -> float:
    """Mean windowed SSIM on luminance: 11x11 Gaussian window (sigma 1.5),
    C1=(0.01*peak)^2, C2=(0.03*peak)^2, mean over valid windows."""
    xl, yl = _to_luma(x), _to_luma(y)
    if xl.shape != yl.shape:
        raise ValueError(f"ssim: shape mismatch {xl.shape} vs {yl.shape}")
    h, w = xl.shape
    if min(h, w) < SSIM_WINDOW:
        raise ValueError(f"ssim: image {h}x{w} smaller than the {SSIM_WINDOW}px window")
    win = gaussian_window()
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2

    def wmean(img):
        v = np.lib.stride_tricks.sliding_window_view(img, (SSIM_WINDOW, SSIM_WINDOW))
        return np.einsum("ijkl,kl->ij", v, win)

    mu_x = wmean(xl)
    mu_y = wmean(yl)
    sxx = wmean(xl * xl) - mu_x * mu_x
    syy = wmean(yl * yl) - mu_y * mu_y
    sxy = wmean(xl * yl) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * sxy + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))
