"""Image containers, color management, resampling, and bit-exact file I/O.

Images are numpy arrays of shape (H, W, C) with C in {1, 3}, float32,
linear-light values in [0, inf). All math in this package happens in linear
RGB; the sRGB transfer curve is applied only at the 8-bit I/O boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image

LUMA_WEIGHTS = np.array([0.2126, 0.7152, 0.0722], dtype=np.float64)


def as_image(arr, channels=None) -> np.ndarray:
    """Validate and normalize an array to (H, W, C) float32 image layout."""
    img = np.asarray(arr, dtype=np.float32)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise ValueError(f"expected (H, W, 1|3) image, got shape {img.shape}")
    if channels is not None and img.shape[2] != channels:
        raise ValueError(f"expected {channels} channels, got {img.shape[2]}")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite values")
    return img


def luminance(img: np.ndarray) -> np.ndarray:
    """Rec.709 luminance of a linear image, shape (H, W)."""
    img = as_image(img)
    if img.shape[2] == 1:
        return img[:, :, 0].astype(np.float64)
    return img.astype(np.float64) @ LUMA_WEIGHTS


# ---------------------------------------------------------------------------
# sRGB transfer (8-bit boundary only)
# ---------------------------------------------------------------------------

def srgb_decode(img8: np.ndarray) -> np.ndarray:
    """8-bit sRGB codes -> linear image in [0, 1]."""
    v = np.asarray(img8, dtype=np.float64) / 255.0
    lin = np.where(v <= 0.04045, v / 12.92, ((v + 0.055) / 1.055) ** 2.4)
    if lin.ndim == 2:
        lin = lin[:, :, None]
    return lin.astype(np.float32)


def srgb_encode(img: np.ndarray) -> np.ndarray:
    """Linear image -> 8-bit sRGB codes. Clamps to [0, 1] first."""
    c = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    v = np.where(c <= 0.0031308, 12.92 * c, 1.055 * c ** (1.0 / 2.4) - 0.055)
    # round half away from zero (values are nonnegative here)
    return np.floor(v * 255.0 + 0.5).astype(np.uint8)


# ---------------------------------------------------------------------------
# Resampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Resampler:
    """Resize target. mode=None picks area-average when an axis shrinks and
    bilinear when it grows; an explicit mode forces that filter on both axes.
    """
    height: int
    width: int
    mode: str | None = None  # None | "bilinear" | "area"


def _area_weights(n_in: int, n_out: int) -> np.ndarray:
    # Row i integrates the input cells overlapped by output cell i.
    scale = n_in / n_out
    w = np.zeros((n_out, n_in), dtype=np.float64)
    for i in range(n_out):
        lo, hi = i * scale, (i + 1) * scale
        j0, j1 = int(np.floor(lo)), int(np.ceil(hi))
        for j in range(j0, min(j1, n_in)):
            w[i, j] = min(hi, j + 1) - max(lo, j)
    return w / scale


def _bilinear_weights(n_in: int, n_out: int) -> np.ndarray:
    # Half-pixel centers, edge-clamped: every row is a convex combination.
    w = np.zeros((n_out, n_in), dtype=np.float64)
    centers = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    centers = np.clip(centers, 0.0, n_in - 1.0)
    j0 = np.floor(centers).astype(int)
    j1 = np.minimum(j0 + 1, n_in - 1)
    frac = centers - j0
    for i in range(n_out):
        w[i, j0[i]] += 1.0 - frac[i]
        w[i, j1[i]] += frac[i]
    return w


def _axis_weights(n_in: int, n_out: int, mode: str | None) -> np.ndarray:
    if mode == "area" or (mode is None and n_out < n_in):
        return _area_weights(n_in, n_out)
    if n_out == n_in and mode is None:
        return np.eye(n_in, dtype=np.float64)
    return _bilinear_weights(n_in, n_out)


def resize(img: np.ndarray, r: Resampler) -> np.ndarray:
    """Resample an image: area-average on shrinking axes, bilinear on growing
    ones. Separable row-stochastic weights, so resizing is linear and
    preserves constants."""
    img = as_image(img)
    if r.height < 1 or r.width < 1:
        raise ValueError(f"invalid resize target {r.height}x{r.width}")
    h_in, w_in, _ = img.shape
    wy = _axis_weights(h_in, r.height, r.mode)
    wx = _axis_weights(w_in, r.width, r.mode)
    out = np.einsum("ij,jwc->iwc", wy, img.astype(np.float64))
    out = np.einsum("kj,hjc->hkc", wx, out)
    return out.astype(np.float32)


def resize_to(img: np.ndarray, height: int, width: int) -> np.ndarray:
    return resize(img, Resampler(height, width))


# ---------------------------------------------------------------------------
# PFM (float interchange; bit-exact round trip)
# ---------------------------------------------------------------------------

def _read_token(f) -> bytes:
    tok = b""
    while True:
        c = f.read(1)
        if not c:
            raise ValueError("unexpected end of PFM header")
        if c.isspace():
            if tok:
                return tok
            continue
        tok += c


def read_pfm(path) -> np.ndarray:
    """Read a PFM file to an (H, W, C) float32 image."""
    with open(path, "rb") as f:
        magic = _read_token(f)
        if magic == b"PF":
            channels = 3
        elif magic == b"Pf":
            channels = 1
        else:
            raise ValueError(f"not a PFM file (magic {magic!r})")
        try:
            width = int(_read_token(f))
            height = int(_read_token(f))
            scale = float(_read_token(f))
        except ValueError as e:
            raise ValueError(f"malformed PFM header: {e}") from None
        if width < 1 or height < 1 or scale == 0.0:
            raise ValueError(f"malformed PFM header: {width}x{height} scale {scale}")
        count = width * height * channels
        payload = f.read(4 * count)
        if len(payload) != 4 * count:
            raise ValueError(
                f"PFM payload size mismatch: expected {4 * count} bytes, got {len(payload)}"
            )
        endian = "<" if scale < 0 else ">"
        data = np.frombuffer(payload, dtype=endian + "f4").reshape(height, width, channels)
    nan_idx = np.flatnonzero(np.isnan(data))
    if nan_idx.size:
        raise ValueError(f"PFM payload contains NaN at flat pixel index {int(nan_idx[0] // channels)}")
    # PFM stores rows bottom-to-top
    return np.ascontiguousarray(data[::-1].astype("<f4", copy=False))


def pfm_bytes(img: np.ndarray) -> bytes:
    """Serialize an (H, W, C) float32 image as little-endian PFM."""
    img = np.asarray(img, dtype=np.float32)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise ValueError(f"expected (H, W, 1|3) image, got shape {img.shape}")
    nan_idx = np.flatnonzero(np.isnan(img))
    if nan_idx.size:
        raise ValueError(f"refusing to write NaN at flat pixel index {int(nan_idx[0] // img.shape[2])}")
    h, w, c = img.shape
    magic = b"PF\n" if c == 3 else b"Pf\n"
    return magic + f"{w} {h}\n".encode("ascii") + b"-1.0\n" + img[::-1].astype("<f4").tobytes()


def write_pfm(img: np.ndarray, path) -> None:
    with open(path, "wb") as f:
        f.write(pfm_bytes(img))


# ---------------------------------------------------------------------------
# PNG (8-bit display path)
# ---------------------------------------------------------------------------

def read_png(path) -> np.ndarray:
    """Read an 8-bit PNG as uint8 (H, W, C), C in {1, 3}."""
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        arr = np.asarray(im, dtype=np.uint8)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return arr


def write_png(img8: np.ndarray, path) -> None:
    """Write a uint8 (H, W, C) array as PNG (grayscale for C=1)."""
    img8 = np.asarray(img8, dtype=np.uint8)
    if img8.ndim == 3 and img8.shape[2] == 1:
        img8 = img8[:, :, 0]
    mode = "L" if img8.ndim == 2 else "RGB"
    Image.fromarray(img8, mode=mode).save(path, format="PNG")


def png_bytes(img8: np.ndarray) -> bytes:
    """Deterministic in-memory PNG encoding of a uint8 image."""
    import io

    img8 = np.asarray(img8, dtype=np.uint8)
    if img8.ndim == 3 and img8.shape[2] == 1:
        img8 = img8[:, :, 0]
    mode = "L" if img8.ndim == 2 else "RGB"
    buf = io.BytesIO()
    Image.fromarray(img8, mode=mode).save(buf, format="PNG")
    return buf.getvalue()
