"""Training losses: the seven-term decomposition loss, the generation loss
with cycle consistency, and the high-resolution ratio loss.

All losses are per-element means, so the weights are resolution independent.
Inputs are autodiff Tensors (numpy arrays are lifted to constants).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import formation
from .autodiff import Tensor


@dataclass(frozen=True)
class LossWeights:
    w_grad: float = 0.5  # weight of each multi-scale gradient term
    w_cycle_group: float = 0.5  # weight of the {Lg_SF, Lg_F, Lcyc} group
    scales: int = 4  # pyramid depth of the gradient loss

    def __post_init__(self):
        if self.w_grad < 0 or self.w_cycle_group < 0 or self.scales < 1:
            raise ValueError(f"invalid loss weights {self}")


def _check_same_shape(name, a: Tensor, b: Tensor):
    if a.shape != b.shape:
        raise ValueError(f"{name}: shape mismatch {a.shape} vs {b.shape}")


def l1_loss(x_hat, x_star) -> Tensor:
    """Mean absolute difference over all elements."""
    x_hat, x_star = Tensor._lift(x_hat), Tensor._lift(x_star)
    _check_same_shape("l1_loss", x_hat, x_star)
    return ad.tmean(ad.absolute(x_hat - x_star))


def _forward_diffs(x: Tensor):
    # forward differences with a zero-padded trailing row/column
    n, c, h, w = x.shape
    zcol = Tensor(np.zeros((n, c, h, 1)))
    zrow = Tensor(np.zeros((n, c, 1, w)))
    dx = ad.concat([x[:, :, :, 1:] - x[:, :, :, :-1], zcol], axis=3)
    dy = ad.concat([x[:, :, 1:, :] - x[:, :, :-1, :], zrow], axis=2)
    return dx, dy


def multiscale_gradient_loss(x_hat, x_star, scales: int = 4) -> Tensor:
    """Mean L1 between forward-difference gradients at `scales` pyramid
    levels (factor-2 area downsampling), averaged over the levels."""
    x_hat, x_star = Tensor._lift(x_hat), Tensor._lift(x_star)
    _check_same_shape("multiscale_gradient_loss", x_hat, x_star)
    n, c, h, w = x_hat.shape
    if min(h, w) < 2 ** (scales - 1):
        raise ValueError(f"image {h}x{w} too small for {scales} scales")
    total = None
    a, b = x_hat, x_star
    for level in range(scales):
        if level > 0:
            a, b = ad.avg_pool2(a), ad.avg_pool2(b)
        dxa, dya = _forward_diffs(a)
        dxb, dyb = _forward_diffs(b)
        term = ad.tmean(ad.absolute(dxa - dxb)) + ad.tmean(ad.absolute(dya - dyb))
        total = term if total is None else total + term
    return ad.affine(total, 1.0 / scales, 0.0)


def temperature_loss(t_hat, t_star) -> Tensor:
    """L1 on normalized color temperature."""
    t_hat, t_star = Tensor._lift(t_hat), Tensor._lift(t_star)
    for name, t in (("t_hat", t_hat), ("t_star", t_star)):
        if t.data.min() < 0 or t.data.max() > 1:
            raise ValueError(f"{name} outside [0, 1]: range {t.data.min()}..{t.data.max()}")
    return ad.tmean(ad.absolute(t_hat - t_star))


def decomposition_loss(pred: dict, truth: dict, P, weights: LossWeights = LossWeights()):
    """Seven-term decomposition loss.

    pred:  {"S_A", "S_F", "t_norm"} predicted tensors ((N,1,H,W) shadings,
           (N,1) temperature).
    truth: {"S_A", "S_F", "R", "t_norm"} ground truth.
    P:     the flash photograph (N,3,H,W); the albedo terms are computed on
           the implied albedo so they backpropagate into all three heads.

    Returns (total, terms) where terms holds floats for logging.
    """
    s_a, s_f, t_hat = pred["S_A"], pred["S_F"], Tensor._lift(pred["t_norm"])
    c_hat = formation.kelvin_to_rgb_t(formation.norm_to_kelvin_t(t_hat))
    r_hat = formation.implied_albedo_t(Tensor._lift(P), s_a, s_f, c_hat)

    l1_sa = l1_loss(s_a, truth["S_A"])
    l1_sf = l1_loss(s_f, truth["S_F"])
    l1_r = l1_loss(r_hat, truth["R"])
    lg_sa = multiscale_gradient_loss(s_a, truth["S_A"], weights.scales)
    lg_sf = multiscale_gradient_loss(s_f, truth["S_F"], weights.scales)
    lg_r = multiscale_gradient_loss(r_hat, truth["R"], weights.scales)
    l_t = temperature_loss(t_hat, truth["t_norm"])

    total = l1_sa + l1_sf + l1_r + ad.affine(lg_sa + lg_sf + lg_r, weights.w_grad, 0.0) + l_t
    terms = {
        "l1_s_a": float(l1_sa.data), "l1_s_f": float(l1_sf.data), "l1_r": float(l1_r.data),
        "lg_s_a": float(lg_sa.data), "lg_s_f": float(lg_sf.data), "lg_r": float(lg_r.data),
        "l_t": float(l_t.data),
    }
    return total, terms


def cycle_loss(p_hat, A, decomposer) -> Tensor:
    """Mean |D(P_hat) - A| where `decomposer` maps a photograph tensor to its
    ambient illumination estimate. D's parameters stay frozen; gradients
    still flow through it into P_hat."""
    if decomposer is None:
        raise ValueError("cycle_loss needs a trained decomposer")
    p_hat = Tensor._lift(p_hat)
    a_cycled = decomposer(p_hat)
    return l1_loss(a_cycled, A)


def make_exact_decomposer(S_A, S_F, ambient: formation.AmbientLight):
    """Algebraic oracle decomposer: splits any photograph using known
    ground-truth shadings and temperature. Used to test the cycle loss."""
    c = Tensor(np.asarray(ambient.c_A, dtype=np.float64).reshape(1, 3))
    s_a = Tensor._lift(S_A)
    s_f = Tensor._lift(S_F)

    def decompose(p_hat: Tensor) -> Tensor:
        _, a_hat, _ = formation.split_illuminations_t(p_hat, s_a, s_f, c)
        return a_hat

    return decompose


def generation_loss(pred_s_f, truth: dict, A, decomposer, ambient=None,
                    weights: LossWeights = LossWeights(), use_cycle: bool = True):
    """Generation loss: L1 + gradient terms on the flash shading and flash
    illumination, plus the cycle-consistency term through a frozen
    decomposer.

    truth: {"S_F", "F", "R"}; A is the (white-balanced) ambient photograph.
    `ambient` supplies c_A for synthesizing P_hat: an AmbientLight, an
    (N, 3) chromaticity array/Tensor, or None for white.
    """
    s_f = Tensor._lift(pred_s_f)
    a_t = Tensor._lift(A)
    r_t = Tensor._lift(truth["R"])
    if ambient is None:
        c_A = np.ones(3)
    elif isinstance(ambient, formation.AmbientLight):
        c_A = ambient.c_A
    else:
        c_A = ambient
    f_hat, p_hat = formation.generate_flash_photograph_t(a_t, r_t, s_f, c_A)

    l1_sf = l1_loss(s_f, truth["S_F"])
    l1_f = l1_loss(f_hat, truth["F"])
    lg_sf = multiscale_gradient_loss(s_f, truth["S_F"], weights.scales)
    lg_f = multiscale_gradient_loss(f_hat, truth["F"], weights.scales)
    group = lg_sf + lg_f
    terms = {
        "l1_s_f": float(l1_sf.data), "l1_f": float(l1_f.data),
        "lg_s_f": float(lg_sf.data), "lg_f": float(lg_f.data),
    }
    if use_cycle:
        l_cyc = cycle_loss(p_hat, a_t, decomposer)
        group = group + l_cyc
        terms["l_cyc"] = float(l_cyc.data)
    total = l1_sf + l1_f + ad.affine(group, weights.w_cycle_group, 0.0)
    return total, terms


def highres_loss(r_hr_hat, P, a_star, weights: LossWeights = LossWeights()):
    """L1 + 0.5*gradient loss on the ambient image reconstructed from the
    predicted high-resolution ratio (gradients flow through the inverse
    ratio transform)."""
    from . import highres

    r_hr_hat = Tensor._lift(r_hr_hat)
    a_hr = highres.ratio_inverse_t(r_hr_hat, Tensor._lift(P))
    l1 = l1_loss(a_hr, a_star)
    lg = multiscale_gradient_loss(a_hr, a_star, weights.scales)
    total = l1 + ad.affine(lg, weights.w_grad, 0.0)
    return total, {"l1_a": float(l1.data), "lg_a": float(lg.data)}
