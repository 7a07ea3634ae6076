"""Guided super-resolution through bounded ratio images.

A low-resolution ambient estimate is encoded as a ratio image in [0,1]
relative to the photograph, upscaled, refined by a small guided network that
also sees the full-resolution photograph, and inverted back to an ambient
image at full resolution.
"""

from __future__ import annotations

import numpy as np

from . import imgcore
from .autodiff import Tensor

LOW_RES = 64  # desk-scale stand-in for the low-resolution inference size
FULL_RES = 256  # desk-scale stand-in for the high-resolution output size


def ratio_forward(a_hat: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Bounded ratio image: 2(A+1)/(3(P+1)) - 1/3, clamped to [0,1]."""
    a_hat = np.asarray(a_hat, dtype=np.float32)
    p = np.asarray(p, dtype=np.float32)
    if a_hat.shape != p.shape:
        raise ValueError(f"ratio_forward: shape mismatch {a_hat.shape} vs {p.shape}")
    r = 2.0 * (a_hat + 1.0) / (3.0 * (p + 1.0)) - 1.0 / 3.0
    return np.clip(r, 0.0, 1.0)


def ratio_inverse(r: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Inverse transform (3R+1)(P+1)/2 - 1, clamped to >= 0."""
    r = np.asarray(r, dtype=np.float32)
    p = np.asarray(p, dtype=np.float32)
    if r.shape != p.shape:
        raise ValueError(f"ratio_inverse: shape mismatch {r.shape} vs {p.shape}")
    return np.maximum((3.0 * r + 1.0) * (p + 1.0) / 2.0 - 1.0, 0.0)


def ratio_inverse_t(r: Tensor, p: Tensor) -> Tensor:
    """Differentiable flavor of the inverse transform (unclamped, so the
    training loss sees gradients everywhere)."""
    return (3.0 * r + 1.0) * (p + 1.0) * 0.5 - 1.0


def logit_clamped(r: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """log(r/(1-r)) with r clamped away from {0,1}; the guided SR network
    predicts a residual around this, giving an exact pass-through at init."""
    r = np.clip(np.asarray(r, dtype=np.float64), eps, 1.0 - eps)
    return np.log(r / (1.0 - r))


def guided_sr(p_full: np.ndarray, a_low: np.ndarray, model,
              low_res: int | None = None, full_res: int | None = None,
              return_ratio: bool = False):
    """Upscale a low-resolution ambient estimate guided by the full photo.

    Computes the low-res ratio image, bilinearly upscales it, concatenates
    it with the photograph (6 channels), runs the guided network to predict
    the high-resolution ratio, and inverts it against the full photograph.
    With return_ratio the predicted high-res ratio comes back as well.
    """
    p_full = imgcore.as_image(p_full, channels=3)
    a_low = imgcore.as_image(a_low, channels=3)
    low = low_res if low_res is not None else getattr(model, "low_res", LOW_RES)
    full = full_res if full_res is not None else getattr(model, "full_res", FULL_RES)
    if a_low.shape[:2] != (low, low):
        raise ValueError(f"guided_sr: low-res input is {a_low.shape[:2]}, expected {(low, low)}")
    if p_full.shape[:2] != (full, full):
        raise ValueError(f"guided_sr: full-res input is {p_full.shape[:2]}, expected {(full, full)}")

    p_low = imgcore.resize_to(p_full, low, low)
    r_lr = ratio_forward(a_low, p_low)
    r_up = imgcore.resize_to(r_lr, full, full)
    r_up = np.clip(r_up, 0.0, 1.0)

    x = np.concatenate([r_up, p_full], axis=2).transpose(2, 0, 1)[None]  # (1,6,H,W)
    base = logit_clamped(r_up).transpose(2, 0, 1)[None]
    r_hr = model.forward(Tensor(x), residual_base=Tensor(base))
    r_hr_img = np.clip(r_hr.data[0].transpose(1, 2, 0), 0.0, 1.0)
    a_full = ratio_inverse(r_hr_img, p_full)
    return (a_full, r_hr_img) if return_ratio else a_full


def passthrough_ratio(p_full: np.ndarray, a_low: np.ndarray, low: int, full: int) -> np.ndarray:
    """Baseline high-res ratio: the bilinearly upscaled low-res ratio."""
    p_low = imgcore.resize_to(imgcore.as_image(p_full, channels=3), low, low)
    r_lr = ratio_forward(imgcore.as_image(a_low, channels=3), p_low)
    return np.clip(imgcore.resize_to(r_lr, full, full), 0.0, 1.0)
