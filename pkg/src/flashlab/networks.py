"""Toy conv encoder-decoder networks.

Desk-scale stand-ins that keep the design point of the full system: one
shared encoder; one decoder per predicted shading with skip connections; a
pooled temperature head of three linear layers ending in a sigmoid. Shading
heads go through softplus so predicted shadings are nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor


@dataclass(frozen=True)
class EncoderDecoderConfig:
    in_channels: int
    out_channels: int = 1
    base_width: int = 16
    levels: int = 3
    heads: int = 1
    temperature_head: bool = False
    head_activation: str = "softplus"  # softplus | sigmoid | sigmoid_residual
    identity_init: bool = False  # zero the head convs (exact pass-through for SR)

    def __post_init__(self):
        if self.base_width < 1 or self.levels < 1 or self.heads not in (1, 2):
            raise ValueError(f"invalid config {self}")
        if self.head_activation not in ("softplus", "sigmoid", "sigmoid_residual"):
            raise ValueError(f"unknown head activation {self.head_activation}")

    @property
    def widths(self) -> list[int]:
        # encoder widths, growth capped at 4x base
        return [self.base_width] + [
            min(self.base_width * 2 ** (i + 1), self.base_width * 4) for i in range(self.levels)
        ]


DECOMPOSITION_CONFIG = EncoderDecoderConfig(
    in_channels=10, heads=2, temperature_head=True)  # photo + albedo + normals + depth
GENERATION_CONFIG = EncoderDecoderConfig(
    in_channels=7, heads=1)  # albedo + normals + depth (no photo)
SR_CONFIG = EncoderDecoderConfig(
    in_channels=6, out_channels=3, heads=1,
    head_activation="sigmoid_residual", identity_init=True)  # upscaled ratio + photo

TEMP_HIDDEN = (32, 16)


def init_parameters(config: EncoderDecoderConfig, seed: int) -> dict:
    """He fan-in scaled conv/linear weights, zero biases, deterministic."""
    rng = np.random.default_rng(seed)

    def conv(cin, cout, zero=False):
        if zero:
            w = np.zeros((cout, cin, 3, 3), dtype=np.float32)
        else:
            std = np.sqrt(2.0 / (cin * 9))
            w = (rng.standard_normal((cout, cin, 3, 3)) * std).astype(np.float32)
        return w, np.zeros(cout, dtype=np.float32)

    def linear(fin, fout):
        std = np.sqrt(2.0 / fin)
        w = (rng.standard_normal((fin, fout)) * std).astype(np.float32)
        return w, np.zeros(fout, dtype=np.float32)

    ws = config.widths
    params: dict[str, np.ndarray] = {}
    params["stem.w"], params["stem.b"] = conv(config.in_channels, ws[0])
    for i in range(config.levels):
        params[f"enc{i}.down.w"], params[f"enc{i}.down.b"] = conv(ws[i], ws[i + 1])
        params[f"enc{i}.conv.w"], params[f"enc{i}.conv.b"] = conv(ws[i + 1], ws[i + 1])
    for h in range(config.heads):
        for i in reversed(range(config.levels)):
            params[f"dec{h}.{i}.w"], params[f"dec{h}.{i}.b"] = conv(ws[i + 1] + ws[i], ws[i])
        params[f"head{h}.w"], params[f"head{h}.b"] = conv(
            ws[0], config.out_channels, zero=config.identity_init)
    if config.temperature_head:
        dims = (ws[-1],) + TEMP_HIDDEN + (1,)
        for j in range(3):
            params[f"temp.fc{j}.w"], params[f"temp.fc{j}.b"] = linear(dims[j], dims[j + 1])
    return params


class ToyNet:
    """Parameter container + forward pass for one EncoderDecoderConfig."""

    def __init__(self, config: EncoderDecoderConfig, params: dict):
        self.config = config
        self.params = {k: v if isinstance(v, Tensor) else Tensor(v, requires_grad=True)
                       for k, v in params.items()}

    @classmethod
    def create(cls, config: EncoderDecoderConfig, seed: int) -> "ToyNet":
        return cls(config, init_parameters(config, seed))

    def parameters(self) -> list[Tensor]:
        return [self.params[k] for k in sorted(self.params)]

    def param_arrays(self) -> dict:
        return {k: self.params[k].data for k in sorted(self.params)}

    def _conv(self, x, name, stride=1):
        return ad.conv2d(x, self.params[f"{name}.w"], self.params[f"{name}.b"],
                         stride=stride, pad=1)

    def forward(self, x: Tensor, residual_base: Tensor | None = None):
        """Returns (head outputs..., [t_norm]) per the config."""
        cfg = self.config
        n, c, h, w = x.shape
        if c != cfg.in_channels:
            raise ValueError(f"expected {cfg.in_channels} input channels, got {c}")
        if h % (2 ** cfg.levels) or w % (2 ** cfg.levels):
            raise ValueError(f"spatial dims {h}x{w} not divisible by 2^{cfg.levels}")

        feats = [ad.leaky_relu(self._conv(x, "stem"))]
        y = feats[0]
        for i in range(cfg.levels):
            y = ad.leaky_relu(self._conv(y, f"enc{i}.down", stride=2))
            y = ad.leaky_relu(self._conv(y, f"enc{i}.conv"))
            feats.append(y)
        bottleneck = feats[-1]

        outputs = []
        for hd in range(cfg.heads):
            y = bottleneck
            for i in reversed(range(cfg.levels)):
                y = ad.upsample2_nearest(y)
                y = ad.concat([y, feats[i]], axis=1)
                y = ad.leaky_relu(self._conv(y, f"dec{hd}.{i}"))
            pre = self._conv(y, f"head{hd}")
            if cfg.head_activation == "softplus":
                outputs.append(ad.softplus(pre))
            elif cfg.head_activation == "sigmoid":
                outputs.append(ad.sigmoid(pre))
            else:  # sigmoid_residual
                if residual_base is None:
                    raise ValueError("sigmoid_residual head needs residual_base")
                outputs.append(ad.sigmoid(pre + residual_base))

        if cfg.temperature_head:
            t = ad.global_avg_pool(bottleneck)
            for j in range(3):
                t = ad.matmul_bias(t, self.params[f"temp.fc{j}.w"], self.params[f"temp.fc{j}.b"])
                if j < 2:
                    t = ad.relu(t)
            outputs.append(ad.sigmoid(t))
        return outputs[0] if len(outputs) == 1 else tuple(outputs)

    def save(self, path) -> None:
        ad.save_checkpoint(path, self.param_arrays(), {"network": asdict(self.config)})

    @classmethod
    def load(cls, path) -> "ToyNet":
        params, meta = ad.load_checkpoint(path)
        cfg = EncoderDecoderConfig(**meta["network"])
        return cls(cfg, params)


def decomposition_forward(net: ToyNet, x: Tensor):
    """(N,10,H,W) -> (S_A, S_F, t_norm): softplus shadings, sigmoid t."""
    if not (net.config.heads == 2 and net.config.temperature_head):
        raise ValueError("decomposition_forward needs a 2-head + temperature config")
    s_a, s_f, t = net.forward(x)
    return s_a, s_f, t


def generation_forward(net: ToyNet, x: Tensor):
    """(N,7,H,W) -> S_F, nonnegative."""
    if not (net.config.heads == 1 and not net.config.temperature_head):
        raise ValueError("generation_forward needs a 1-head config without temperature")
    return net.forward(x)


def checkpoint_meta(net: ToyNet, extra: dict | None = None) -> dict:
    meta = {"network": asdict(net.config)}
    if extra:
        meta.update(extra)
    return meta
