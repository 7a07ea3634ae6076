"""Intrinsic flash-photograph formation model.

A flash photograph is the linear-light sum of a flash and an ambient
illumination sharing one albedo: P = R * (c_A * S_A + S_F), where S_A and
S_F are single-channel shadings and c_A is the ambient chromaticity relative
to the (white) flash, parameterized by a single color temperature.

Every operation has a plain flavor on (H, W, C) numpy images and a
differentiable flavor on (N, C, H, W) autodiff Tensors. Both flavors call
the same core formula, so they cannot drift apart.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import imgcore
from .autodiff import EPS, Tensor

K_MIN = 2000.0
K_MAX = 10000.0
FLASH_KELVIN = 6500.0

# Blackbody chromaticity: cubic-spline locus fit (CIE 1931 xy), then the
# standard XYZ -> linear sRGB (D65) matrix.
_XC_LO = (-0.2661239e9, -0.2343589e6, 0.8776956e3, 0.179910)  # 1667K..4000K
_XC_HI = (-3.0258469e9, 2.1070379e6, 0.2226347e3, 0.240390)  # 4000K..25000K
_YC_1 = (-1.1063814, -1.34811020, 2.18555832, -0.20219683)  # 1667K..2222K
_YC_2 = (-0.9549476, -1.37418593, 2.09137015, -0.16748867)  # 2222K..4000K
_YC_3 = (3.0817580, -5.87338670, 3.75112997, -0.37001483)  # 4000K..25000K
_XYZ_TO_SRGB = (
    (3.2404542, -1.5371385, -0.4985314),
    (-0.9692660, 1.8760108, 0.0415560),
    (0.0556434, -0.2040259, 1.0572252),
)


def _raw(x):
    return x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)


def _recip(x):
    if isinstance(x, Tensor):
        return ad.div(1.0, x)
    return 1.0 / np.maximum(_raw(x), EPS)


def _guarded_div(num, den):
    if isinstance(num, Tensor) or isinstance(den, Tensor):
        return ad.div(num, den)
    return np.asarray(num) / np.maximum(np.asarray(den), EPS)


def _pair_max(a, b):
    d = b - a
    if isinstance(d, Tensor):
        return a + ad.relu(d)
    return a + np.maximum(d, 0.0)


def _cubic(coeffs, x):
    c3, c2, c1, c0 = coeffs
    return ((c3 * x + c2) * x + c1) * x + c0


def _locus_linear_rgb(kelvin):
    """Un-normalized blackbody linear-sRGB at the given temperature(s).

    Works on float numpy arrays and on Tensors alike; branch masks are
    data-dependent constants, so the result stays piecewise differentiable.
    """
    t_raw = _raw(kelvin)
    u = _recip(kelvin)  # 1/T
    x_lo = _cubic(_XC_LO, u)
    x_hi = _cubic(_XC_HI, u)
    m_lo = (t_raw < 4000.0).astype(np.float64)
    x = m_lo * x_lo + (1.0 - m_lo) * x_hi

    m1 = (t_raw < 2222.0).astype(np.float64)
    m2 = ((t_raw >= 2222.0) & (t_raw < 4000.0)).astype(np.float64)
    m3 = (t_raw >= 4000.0).astype(np.float64)
    y = m1 * _cubic(_YC_1, x) + m2 * _cubic(_YC_2, x) + m3 * _cubic(_YC_3, x)

    inv_y = _recip(y)
    big_x = x * inv_y  # Y normalized to 1
    big_z = (1.0 - x - y) * inv_y
    channels = []
    for mr in _XYZ_TO_SRGB:
        channels.append(mr[0] * big_x + mr[1] + mr[2] * big_z)
    return channels  # [r, g, b], each same shape as kelvin


_FLASH_RGB = [float(c) for c in _locus_linear_rgb(np.float64(FLASH_KELVIN))]


def kelvin_to_rgb(kelvin: float) -> np.ndarray:
    """Ambient chromaticity c_A: blackbody RGB divided by the flash-point
    RGB, then scaled so the max channel is 1. kelvin_to_rgb(6500) == (1,1,1).
    """
    kelvin = float(kelvin)
    if not (K_MIN <= kelvin <= K_MAX):
        raise ValueError(f"kelvin {kelvin} outside [{K_MIN}, {K_MAX}]")
    raw = _locus_linear_rgb(np.float64(kelvin))
    rel = np.array([float(c) / f for c, f in zip(raw, _FLASH_RGB)], dtype=np.float64)
    return rel / rel.max()


def kelvin_to_rgb_t(kelvin: Tensor) -> Tensor:
    """Differentiable flavor: (N, 1) kelvin Tensor -> (N, 3) chromaticity."""
    raw = _locus_linear_rgb(kelvin)
    rel = [c * (1.0 / f) for c, f in zip(raw, _FLASH_RGB)]
    peak = _pair_max(_pair_max(rel[0], rel[1]), rel[2])
    return ad.concat([ad.div(c, peak) for c in rel], axis=1)


@dataclass
class AmbientLight:
    """Ambient color temperature plus its derived chromaticity."""

    kelvin: float
    t_norm: float = field(init=False)
    c_A: np.ndarray = field(init=False)

    def __post_init__(self):
        self.kelvin = float(self.kelvin)
        if not (K_MIN <= self.kelvin <= K_MAX):
            raise ValueError(f"kelvin {self.kelvin} outside [{K_MIN}, {K_MAX}]")
        self.t_norm = (self.kelvin - K_MIN) / (K_MAX - K_MIN)
        self.c_A = kelvin_to_rgb(self.kelvin)

    @classmethod
    def from_norm(cls, t_norm: float) -> "AmbientLight":
        return cls(K_MIN + float(t_norm) * (K_MAX - K_MIN))


def norm_to_kelvin_t(t_norm: Tensor) -> Tensor:
    """t_norm in [0,1] -> Kelvin, differentiable."""
    return ad.affine(t_norm, K_MAX - K_MIN, K_MIN)


# ---------------------------------------------------------------------------
# Composition and decomposition
# ---------------------------------------------------------------------------

@dataclass
class IntrinsicComponents:
    """Ground-truth-side scene intrinsics: albedo + two shadings + ambient."""

    R: np.ndarray  # (H, W, 3) in [0, 1]
    S_A: np.ndarray  # (H, W, 1) >= 0
    S_F: np.ndarray  # (H, W, 1) >= 0
    ambient: AmbientLight

    def __post_init__(self):
        self.R = imgcore.as_image(self.R, channels=3)
        self.S_A = imgcore.as_image(self.S_A, channels=1)
        self.S_F = imgcore.as_image(self.S_F, channels=1)
        for name, arr in (("R", self.R), ("S_A", self.S_A), ("S_F", self.S_F)):
            if arr.min() < 0:
                raise ValueError(f"{name} must be nonnegative")
        if not (self.R.shape[:2] == self.S_A.shape[:2] == self.S_F.shape[:2]):
            raise ValueError(
                f"shape mismatch: R {self.R.shape}, S_A {self.S_A.shape}, S_F {self.S_F.shape}"
            )


@dataclass
class DecompositionResult:
    """Eq.-derived quantities from a photograph and predicted shadings."""

    S_A: np.ndarray
    S_F: np.ndarray
    ambient: AmbientLight
    R: np.ndarray
    A: np.ndarray
    F: np.ndarray
    valid: np.ndarray  # (H, W) bool: denominator >= EPS on every channel


def _compose_core(R, S_A, S_F, c):
    A = R * (c * S_A)
    F = R * S_F
    return A + F, A, F


def compose_flash_photograph(comp: IntrinsicComponents):
    """(P, A, F) from intrinsics: A = R*c_A*S_A, F = R*S_F, P = A + F."""
    c = comp.ambient.c_A.astype(np.float32)
    P, A, F = _compose_core(comp.R, comp.S_A, comp.S_F, c)
    return P, A, F


def compose_t(R: Tensor, S_A: Tensor, S_F: Tensor, c: Tensor):
    """Differentiable flavor on (N,3,H,W)/(N,1,H,W) tensors, c as (N,3)."""
    return _compose_core(R, S_A, S_F, ad.reshape(c, (c.shape[0], 3, 1, 1)))


def _implied_albedo_core(P, S_A, S_F, c):
    den = c * S_A + S_F
    return _guarded_div(P, den), den


def implied_albedo(P, S_A_hat, S_F_hat, ambient_hat: AmbientLight, return_mask=False):
    """R_hat = P / (c_A*S_A + S_F), epsilon-guarded."""
    P = imgcore.as_image(P, channels=3)
    S_A_hat = imgcore.as_image(S_A_hat, channels=1)
    S_F_hat = imgcore.as_image(S_F_hat, channels=1)
    if P.shape[:2] != S_A_hat.shape[:2] or P.shape[:2] != S_F_hat.shape[:2]:
        raise ValueError(f"shape mismatch: P {P.shape}, S_A {S_A_hat.shape}, S_F {S_F_hat.shape}")
    c = ambient_hat.c_A.astype(np.float32)
    r_hat, den = _implied_albedo_core(P, S_A_hat, S_F_hat, c)
    if not return_mask:
        return r_hat
    return r_hat, den.min(axis=2) >= EPS


def implied_albedo_t(P: Tensor, S_A_hat: Tensor, S_F_hat: Tensor, c_hat: Tensor) -> Tensor:
    """Differentiable flavor; backpropagates into both shadings and c_hat."""
    c = ad.reshape(c_hat, (c_hat.shape[0], 3, 1, 1))
    r_hat, _ = _implied_albedo_core(P, S_A_hat, S_F_hat, c)
    return r_hat


def split_illuminations(P, S_A_hat, S_F_hat, ambient_hat: AmbientLight) -> DecompositionResult:
    """R_hat via the implied albedo, then A_hat = R_hat*c_A*S_A_hat and
    F_hat = R_hat*S_F_hat. A_hat + F_hat == P wherever the mask is true."""
    r_hat, valid = implied_albedo(P, S_A_hat, S_F_hat, ambient_hat, return_mask=True)
    S_A_hat = imgcore.as_image(S_A_hat, channels=1)
    S_F_hat = imgcore.as_image(S_F_hat, channels=1)
    c = ambient_hat.c_A.astype(np.float32)
    a_hat = r_hat * (c * S_A_hat)
    f_hat = r_hat * S_F_hat
    return DecompositionResult(
        S_A=S_A_hat, S_F=S_F_hat, ambient=ambient_hat, R=r_hat, A=a_hat, F=f_hat, valid=valid
    )


def split_illuminations_t(P: Tensor, S_A_hat: Tensor, S_F_hat: Tensor, c_hat: Tensor):
    """Differentiable flavor. Returns (R_hat, A_hat, F_hat) tensors."""
    c = ad.reshape(c_hat, (c_hat.shape[0], 3, 1, 1))
    r_hat, _ = _implied_albedo_core(P, S_A_hat, S_F_hat, c)
    a_hat = r_hat * (c * S_A_hat)
    f_hat = r_hat * S_F_hat
    return r_hat, a_hat, f_hat


def _generate_core(A, R, S_F, c):
    F = R * S_F
    return F, F + c * A


def generate_flash_photograph(A, R, S_F_hat, c_A: np.ndarray):
    """Eq. for flash synthesis: F_hat = R*S_F_hat, P_hat = F_hat + c_A*A.
    A is assumed white-balanced for the ambient light."""
    A = imgcore.as_image(A, channels=3)
    R = imgcore.as_image(R, channels=3)
    S_F_hat = imgcore.as_image(S_F_hat, channels=1)
    if A.shape[:2] != R.shape[:2] or A.shape[:2] != S_F_hat.shape[:2]:
        raise ValueError(f"shape mismatch: A {A.shape}, R {R.shape}, S_F {S_F_hat.shape}")
    return _generate_core(A, R, S_F_hat, np.asarray(c_A, dtype=np.float32))


def generate_flash_photograph_t(A: Tensor, R: Tensor, S_F_hat: Tensor, c_A):
    c = c_A if isinstance(c_A, Tensor) else Tensor(np.asarray(c_A, dtype=np.float64))
    if c.data.ndim == 1:
        c = ad.reshape(c, (1, 3, 1, 1))
    elif c.data.ndim == 2:
        c = ad.reshape(c, (c.shape[0], 3, 1, 1))
    return _generate_core(A, R, S_F_hat, c)


def relight(d: DecompositionResult, kappa: float, alpha: float, kelvin: float) -> np.ndarray:
    """Re-render with flash strength kappa, ambient strength alpha, and a new
    ambient temperature: R_hat * (alpha*c_A'*S_A + kappa*S_F)."""
    kappa, alpha = float(kappa), float(alpha)
    if kappa < 0 or alpha < 0:
        raise ValueError(f"kappa/alpha must be >= 0, got {kappa}, {alpha}")
    c_new = AmbientLight(kelvin).c_A.astype(np.float32)
    # evaluated as alpha*A' + kappa*F so the identity edit (1, 1, stored
    # kelvin) is bit-exact against A + F
    a_new = d.R * (c_new * d.S_A)
    return np.float32(alpha) * a_new + np.float32(kappa) * d.F


# ---------------------------------------------------------------------------
# Decomposition directory format
# ---------------------------------------------------------------------------

def image_hash(img: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(img, dtype="<f4").tobytes()).hexdigest()


def save_decomposition(d: DecompositionResult, out_dir, source: np.ndarray | None = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, img in (("S_A", d.S_A), ("S_F", d.S_F), ("R", d.R), ("A", d.A), ("F", d.F)):
        imgcore.write_pfm(img, out / f"{name}.pfm")
    meta = {
        "kelvin": d.ambient.kelvin,
        "t_norm": d.ambient.t_norm,
        "c_A": [float(v) for v in d.ambient.c_A],
        "epsilon": EPS,
        "source_hash": image_hash(source) if source is not None else None,
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True))


def load_decomposition(in_dir) -> DecompositionResult:
    src = Path(in_dir)
    meta = json.loads((src / "meta.json").read_text())
    imgs = {name: imgcore.read_pfm(src / f"{name}.pfm") for name in ("S_A", "S_F", "R", "A", "F")}
    ambient = AmbientLight(meta["kelvin"])
    den = ambient.c_A.astype(np.float32) * imgs["S_A"] + imgs["S_F"]
    return DecompositionResult(
        S_A=imgs["S_A"], S_F=imgs["S_F"], ambient=ambient,
        R=imgs["R"], A=imgs["A"], F=imgs["F"], valid=den.min(axis=2) >= EPS,
    )
