"""Training orchestration: decomposition first, then generation with cycle
consistency through the frozen decomposer, plus guided-SR training,
evaluation, and inference entry points.
"""

from __future__ import annotations

import csv
import hashlib
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import dataset, formation, highres, imgcore, losses, metrics, networks
from .autodiff import Tensor
from .networks import ToyNet

TASKS = ("decomposition", "generation", "sr")


@dataclass
class TrainConfig:
    task: str
    data_root: str
    ckpt_dir: str
    epochs: int = 100
    lr: float = 2e-4
    batch_size: int = 4
    seed: int = 0
    decomposer_ckpt: str | None = None
    use_cycle: bool = True
    base_width: int = 16
    levels: int = 3
    checkpoint_every: int = 10
    lr_schedule: str = ""  # "" picks per task: constant, constant, linear_decay
    sr_low_res: int = highres.LOW_RES

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}, expected one of {TASKS}")
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.task == "generation" and not self.decomposer_ckpt:
            raise ValueError("generation training requires --decomposer (a trained decomposition checkpoint)")
        if not self.lr_schedule:
            self.lr_schedule = "linear_decay" if self.task == "sr" else "constant"


@dataclass
class TrainReport:
    rows: list = field(default_factory=list)  # one dict per epoch
    final_val: dict = field(default_factory=dict)
    wall_clock: float = 0.0
    csv_path: str = ""
    best_ckpt: str = ""
    final_ckpt: str = ""


def params_checksum(arrays: dict) -> str:
    h = hashlib.sha256()
    for name in sorted(arrays):
        h.update(name.encode())
        h.update(np.ascontiguousarray(arrays[name], dtype="<f4").tobytes())
    return h.hexdigest()


def _epoch_lr(cfg: TrainConfig, epoch: int) -> float:
    if cfg.lr_schedule == "constant":
        return cfg.lr
    # constant for the first half, then linear decay toward zero
    half = cfg.epochs // 2
    if epoch < half or cfg.epochs == half:
        return cfg.lr
    return cfg.lr * (cfg.epochs - epoch) / (cfg.epochs - half)


def _chw(img: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(img.transpose(2, 0, 1))


def _depth_norm(depth: np.ndarray) -> np.ndarray:
    return depth / depth.max()


# ---------------------------------------------------------------------------
# Per-task sample preparation
# ---------------------------------------------------------------------------

def _prep_decomposition(rec: dataset.SceneRecord) -> dict:
    x = np.concatenate([_chw(rec.P), _chw(rec.R), _chw(rec.normals),
                        _chw(_depth_norm(rec.depth))], axis=0)
    return {
        "x": x, "P": _chw(rec.P), "S_A": _chw(rec.S_A), "S_F": _chw(rec.S_F),
        "R": _chw(rec.R), "t_norm": np.array([rec.ambient.t_norm], dtype=np.float32),
    }


def _prep_generation(rec: dataset.SceneRecord) -> dict:
    x = np.concatenate([_chw(rec.R), _chw(rec.normals), _chw(_depth_norm(rec.depth))], axis=0)
    return {
        "x": x, "A": _chw(rec.A), "F": _chw(rec.F), "S_F": _chw(rec.S_F),
        "R": _chw(rec.R), "P": _chw(rec.P),
        "c_A": rec.ambient.c_A.astype(np.float32),
        "t_norm": np.array([rec.ambient.t_norm], dtype=np.float32),
    }


def _prep_sr(rec: dataset.SceneRecord, low: int) -> dict:
    full = rec.P.shape[0]
    a_low = imgcore.resize_to(rec.A, low, low)
    r_up = highres.passthrough_ratio(rec.P, a_low, low, full)
    x = np.concatenate([_chw(r_up), _chw(rec.P)], axis=0)
    return {
        "x": x, "base": _chw(highres.logit_clamped(r_up).astype(np.float32)),
        "P": _chw(rec.P), "A": _chw(rec.A), "r_up": _chw(r_up),
    }


def _stack(samples: list[dict], key: str) -> Tensor:
    return Tensor(np.stack([s[key] for s in samples]))


def _make_network_decomposer(dec_net: ToyNet, aux: np.ndarray):
    """Cycle-loss decomposer: photograph tensor -> ambient estimate, with
    the frozen network's aux inputs (albedo/normals/depth) as constants."""
    aux_t = Tensor(aux)

    def decompose(p_hat: Tensor) -> Tensor:
        x = ad.concat([p_hat, aux_t], axis=1)
        s_a, s_f, t = networks.decomposition_forward(dec_net, x)
        c = formation.kelvin_to_rgb_t(formation.norm_to_kelvin_t(t))
        _, a_hat, _ = formation.split_illuminations_t(p_hat, s_a, s_f, c)
        return a_hat

    return decompose


def _batch_loss(cfg: TrainConfig, net: ToyNet, samples: list[dict],
                dec_net: ToyNet | None):
    """Forward + loss for one batch. Returns (loss Tensor, terms dict)."""
    x = _stack(samples, "x")
    if cfg.task == "decomposition":
        s_a, s_f, t = networks.decomposition_forward(net, x)
        pred = {"S_A": s_a, "S_F": s_f, "t_norm": t}
        truth = {"S_A": _stack(samples, "S_A"), "S_F": _stack(samples, "S_F"),
                 "R": _stack(samples, "R"), "t_norm": _stack(samples, "t_norm")}
        return losses.decomposition_loss(pred, truth, _stack(samples, "P"))
    if cfg.task == "generation":
        s_f = networks.generation_forward(net, x)
        truth = {"S_F": _stack(samples, "S_F"), "F": _stack(samples, "F"),
                 "R": _stack(samples, "R")}
        aux = np.stack([s["x"] for s in samples])  # the 7 non-photo channels
        decomposer = _make_network_decomposer(dec_net, aux) if cfg.use_cycle else None
        return losses.generation_loss(
            s_f, truth, _stack(samples, "A"), decomposer,
            ambient=Tensor(np.stack([s["c_A"] for s in samples])),
            use_cycle=cfg.use_cycle)
    # sr
    r_hr = net.forward(x, residual_base=_stack(samples, "base"))
    return losses.highres_loss(r_hr, _stack(samples, "P"), _stack(samples, "A"))


def _build_net(cfg: TrainConfig) -> ToyNet:
    base = {"base_width": cfg.base_width, "levels": cfg.levels}
    if cfg.task == "decomposition":
        conf = networks.EncoderDecoderConfig(in_channels=10, heads=2,
                                             temperature_head=True, **base)
    elif cfg.task == "generation":
        conf = networks.EncoderDecoderConfig(in_channels=7, heads=1, **base)
    else:
        conf = networks.EncoderDecoderConfig(in_channels=6, out_channels=3, heads=1,
                                             head_activation="sigmoid_residual",
                                             identity_init=True, **base)
    return ToyNet.create(conf, cfg.seed)


def train(cfg: TrainConfig) -> TrainReport:
    """Run one training task to completion; deterministic under cfg.seed."""
    t0 = time.perf_counter()
    records = dataset.load_manifest(cfg.data_root)
    train_recs = [r for r in records if r.split == "train"]
    val_recs = [r for r in records if r.split == "val"] or train_recs[:1]
    if not train_recs:
        raise ValueError(f"no training records in {cfg.data_root}")

    dec_net = None
    frozen_checksum = None
    if cfg.task == "generation":
        dec_net = ToyNet.load(cfg.decomposer_ckpt)
        frozen_checksum = params_checksum(dec_net.param_arrays())

    prep = {
        "decomposition": _prep_decomposition,
        "generation": _prep_generation,
        "sr": lambda r: _prep_sr(r, cfg.sr_low_res),
    }[cfg.task]
    train_samples = [prep(r) for r in train_recs]
    val_samples = [prep(r) for r in val_recs]

    net = _build_net(cfg)
    opt = ad.Adam(net.parameters(), lr=cfg.lr)
    rng = np.random.default_rng(cfg.seed)

    ckpt_dir = Path(cfg.ckpt_dir)
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    meta = networks.checkpoint_meta(net, {"task": cfg.task, "seed": cfg.seed, "lr": cfg.lr})

    report = TrainReport()
    best_val = np.inf
    for epoch in range(cfg.epochs):
        opt.lr = _epoch_lr(cfg, epoch)
        order = rng.permutation(len(train_samples))
        totals, term_sums = [], {}
        for lo in range(0, len(order), cfg.batch_size):
            batch = [train_samples[i] for i in order[lo : lo + cfg.batch_size]]
            opt.zero_grad()
            if dec_net is not None:
                for p in dec_net.parameters():
                    p.zero_grad()
            loss, terms = _batch_loss(cfg, net, batch, dec_net)
            loss.backward()
            opt.step()
            totals.append(float(loss.data))
            for k, v in terms.items():
                term_sums[k] = term_sums.get(k, 0.0) + v

        val_totals = []
        for lo in range(0, len(val_samples), cfg.batch_size):
            vloss, _ = _batch_loss(cfg, net, val_samples[lo : lo + cfg.batch_size], dec_net)
            val_totals.append(float(vloss.data))

        n_batches = len(totals)
        row = {"epoch": epoch, "lr": opt.lr,
               "loss_total": float(np.mean(totals)),
               "val_total": float(np.mean(val_totals))}
        row.update({k: v / n_batches for k, v in sorted(term_sums.items())})
        report.rows.append(row)

        if row["val_total"] < best_val:
            best_val = row["val_total"]
            net_path = ckpt_dir / "best.ckpt"
            ad.save_checkpoint(net_path, net.param_arrays(), meta)
            report.best_ckpt = str(net_path)
        if cfg.checkpoint_every and (epoch + 1) % cfg.checkpoint_every == 0:
            ad.save_checkpoint(ckpt_dir / f"epoch_{epoch + 1:04d}.ckpt", net.param_arrays(), meta)

    final_path = ckpt_dir / "final.ckpt"
    ad.save_checkpoint(final_path, net.param_arrays(), meta)
    report.final_ckpt = str(final_path)

    if dec_net is not None and params_checksum(dec_net.param_arrays()) != frozen_checksum:
        raise AssertionError("frozen decomposer parameters changed during generation training")

    csv_path = ckpt_dir / "loss.csv"
    _write_loss_csv(csv_path, report.rows)
    report.csv_path = str(csv_path)
    val_split = "val" if any(r.split == "val" for r in records) else "train"
    report.final_val = evaluate(final_path, cfg.data_root, val_split,
                                sr_low_res=cfg.sr_low_res)["mean"]
    report.wall_clock = time.perf_counter() - t0
    return report


def _write_loss_csv(path, rows: list[dict]) -> None:
    cols = list(rows[0].keys())
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(cols)
        for row in rows:
            w.writerow([row["epoch"]] + [f"{row[c]:.9e}" for c in cols[1:]])


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _predict_decomposition(net: ToyNet, rec: dataset.SceneRecord):
    s = _prep_decomposition(rec)
    s_a, s_f, t = networks.decomposition_forward(net, Tensor(s["x"][None]))
    t_norm = float(t.data[0, 0])
    amb = formation.AmbientLight.from_norm(t_norm)
    return (s_a.data[0].transpose(1, 2, 0), s_f.data[0].transpose(1, 2, 0), amb)


def _predict_generation(net: ToyNet, rec: dataset.SceneRecord):
    s = _prep_generation(rec)
    s_f = networks.generation_forward(net, Tensor(s["x"][None]))
    return s_f.data[0].transpose(1, 2, 0)


def evaluate(ckpt_path, data_root, split: str = "test",
             sr_low_res: int = highres.LOW_RES) -> dict:
    """Metrics table for a checkpoint on one split. Deterministic."""
    params, meta = ad.load_checkpoint(ckpt_path)
    net = ToyNet(networks.EncoderDecoderConfig(**meta["network"]), params)
    task = meta.get("task") or _infer_task(net.config)
    records = [r for r in dataset.load_manifest(data_root) if r.split == split]
    if not records:
        raise ValueError(f"split {split!r} is empty in {data_root}")

    def scored(estimate, truth):
        return {"psnr_db": metrics.psnr(estimate, truth), "ssim": metrics.ssim(estimate, truth)}

    per_sample = []
    for rec in records:
        if task == "decomposition":
            s_a, s_f, amb = _predict_decomposition(net, rec)
            d = formation.split_illuminations(rec.P, s_a, s_f, amb)
            half = rec.P * np.float32(0.5)  # trivial A = F = P/2 baseline
            per_sample.append({
                "id": rec.id,
                "A": scored(d.A, rec.A), "F": scored(d.F, rec.F),
                "baseline_A": scored(half, rec.A), "baseline_F": scored(half, rec.F),
            })
        elif task == "generation":
            s_f = _predict_generation(net, rec)
            f_hat, p_hat = formation.generate_flash_photograph(
                rec.A, rec.R, s_f, rec.ambient.c_A)
            per_sample.append({
                "id": rec.id, "P": scored(p_hat, rec.P), "F": scored(f_hat, rec.F),
            })
        else:  # sr
            full = rec.P.shape[0]
            a_low = imgcore.resize_to(rec.A, sr_low_res, sr_low_res)
            sample = _prep_sr(rec, sr_low_res)
            r_hr = net.forward(Tensor(sample["x"][None]), residual_base=Tensor(sample["base"][None]))
            model_loss, _ = losses.highres_loss(r_hr, Tensor(sample["P"][None]), Tensor(sample["A"][None]))
            base_loss, _ = losses.highres_loss(Tensor(sample["r_up"][None]),
                                               Tensor(sample["P"][None]), Tensor(sample["A"][None]))
            a_full = highres.guided_sr(rec.P, a_low, net, low_res=sr_low_res, full_res=full)
            per_sample.append({
                "id": rec.id, "A": scored(a_full, rec.A),
                "l_hr": float(model_loss.data), "baseline_l_hr": float(base_loss.data),
            })

    mean: dict = {}
    for key, value in per_sample[0].items():
        if key == "id":
            continue
        if isinstance(value, dict):
            mean[key] = {m: float(np.mean([s[key][m] for s in per_sample])) for m in value}
        else:
            mean[key] = float(np.mean([s[key] for s in per_sample]))
    return {"task": task, "split": split, "count": len(per_sample),
            "mean": mean, "per_sample": per_sample}


def _infer_task(conf: networks.EncoderDecoderConfig) -> str:
    if conf.temperature_head:
        return "decomposition"
    if conf.head_activation == "sigmoid_residual":
        return "sr"
    return "generation"


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------

def infer_decompose(P, albedo, depth, normals, ckpt_path) -> formation.DecompositionResult:
    """Network decomposition of a photograph given its component maps."""
    for name, v in (("P", P), ("albedo", albedo), ("depth", depth), ("normals", normals)):
        if v is None:
            raise ValueError(f"infer_decompose: missing component map {name}")
    net = ToyNet.load(ckpt_path)
    P = imgcore.as_image(P, channels=3)
    x = np.concatenate([
        _chw(P), _chw(imgcore.as_image(albedo, channels=3)),
        _chw(imgcore.as_image(normals, channels=3)),
        _chw(_depth_norm(imgcore.as_image(depth, channels=1))),
    ], axis=0)
    s_a, s_f, t = networks.decomposition_forward(net, Tensor(x[None]))
    amb = formation.AmbientLight.from_norm(float(t.data[0, 0]))
    return formation.split_illuminations(
        P, s_a.data[0].transpose(1, 2, 0), s_f.data[0].transpose(1, 2, 0), amb)


def infer_generate(A, albedo, depth, normals, ckpt_path, kelvin: float = formation.FLASH_KELVIN):
    """Flash synthesis for a no-flash photograph. Returns (F_hat, P_hat)."""
    for name, v in (("A", A), ("albedo", albedo), ("depth", depth), ("normals", normals)):
        if v is None:
            raise ValueError(f"infer_generate: missing component map {name}")
    net = ToyNet.load(ckpt_path)
    A = imgcore.as_image(A, channels=3)
    x = np.concatenate([
        _chw(imgcore.as_image(albedo, channels=3)),
        _chw(imgcore.as_image(normals, channels=3)),
        _chw(_depth_norm(imgcore.as_image(depth, channels=1))),
    ], axis=0)
    s_f = networks.generation_forward(net, Tensor(x[None]))
    c_A = formation.AmbientLight(kelvin).c_A
    return formation.generate_flash_photograph(
        A, imgcore.as_image(albedo, channels=3), s_f.data[0].transpose(1, 2, 0), c_A)
