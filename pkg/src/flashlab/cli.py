"""flashlab command line: synth, train, eval, decompose, generate, relight,
sr, serve.

Exit codes: 0 success, 1 usage error (help text printed), 2 runtime error
(message on stderr). All randomness funnels through --seed, so repeated runs
produce bit-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1 (not argparse's default 2), runtime problems exit 2
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="flashlab", description=__doc__,
                formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--seed", type=int, default=0, help="global random seed")
    p.add_argument("--threads", type=int, default=0, help="cap math threads (0 = all cores)")
    p.add_argument("--verbose", action="store_true", help="chatty progress output")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="render a synthetic dataset",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sp.add_argument("--count", type=int, required=True, help="number of scenes")
    sp.add_argument("--res", type=int, default=64, help="square resolution")
    sp.add_argument("--out", required=True, help="output dataset directory")
    sp.add_argument("--kelvin-min", type=float, default=2000.0)
    sp.add_argument("--kelvin-max", type=float, default=10000.0)

    tp = sub.add_parser("train", help="train a network",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    tp.add_argument("--task", required=True, choices=["decomposition", "generation", "sr"])
    tp.add_argument("--data", required=True, help="dataset directory")
    tp.add_argument("--epochs", type=int, default=100)
    tp.add_argument("--lr", type=float, default=2e-4)
    tp.add_argument("--batch-size", type=int, default=4)
    tp.add_argument("--ckpt-out", required=True, help="checkpoint directory")
    tp.add_argument("--decomposer", default=None, help="frozen decomposition checkpoint (generation)")
    tp.add_argument("--no-cycle", action="store_true", help="drop the cycle-consistency term")
    tp.add_argument("--base-width", type=int, default=16)
    tp.add_argument("--sr-low-res", type=int, default=64)

    ep = sub.add_parser("eval", help="evaluate a checkpoint",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    ep.add_argument("--ckpt", required=True)
    ep.add_argument("--data", required=True)
    ep.add_argument("--split", default="test", choices=["train", "val", "test"])
    ep.add_argument("--out", default=None, help="write metrics JSON here")
    ep.add_argument("--sr-low-res", type=int, default=64)

    dp = sub.add_parser("decompose", help="decompose a scene's flash photograph",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    dp.add_argument("--ckpt", required=True)
    dp.add_argument("--data", required=True)
    dp.add_argument("--scene", required=True)
    dp.add_argument("--out", default=None, help="output dir (default <data>/<scene>/decomp)")

    gp = sub.add_parser("generate", help="synthesize flash for a no-flash scene",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    gp.add_argument("--ckpt", required=True)
    gp.add_argument("--data", required=True)
    gp.add_argument("--scene", required=True)
    gp.add_argument("--kelvin", type=float, default=6500.0, help="target ambient temperature")
    gp.add_argument("--out", required=True, help="output directory for F.pfm / P.pfm / P.png")

    rp = sub.add_parser("relight", help="re-render a decomposed scene",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    rp.add_argument("--data", required=True)
    rp.add_argument("--scene", required=True)
    rp.add_argument("--kappa", type=float, required=True, help="flash strength")
    rp.add_argument("--alpha", type=float, required=True, help="ambient strength")
    rp.add_argument("--kelvin", type=float, required=True, help="ambient temperature")
    rp.add_argument("--out", required=True, help="output PNG path")
    rp.add_argument("--ground-truth", action="store_true",
                    help="relight from ground-truth shadings instead of <scene>/decomp")

    xp = sub.add_parser("sr", help="guided super-resolution of an ambient estimate",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    xp.add_argument("--input", required=True, help="full-resolution photograph PFM")
    xp.add_argument("--lowres", required=True, help="low-resolution ambient PFM")
    xp.add_argument("--ckpt", required=True)
    xp.add_argument("--out", required=True, help="output PFM path")
    xp.add_argument("--ratio-out", default=None, help="also save the predicted ratio image as PFM")

    vp = sub.add_parser("serve", help="run the relighting HTTP service",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    vp.add_argument("--data", required=True)
    vp.add_argument("--bind", default="127.0.0.1")
    vp.add_argument("--port", type=int, default=8787)
    vp.add_argument("--ui-dir", default=None, help="static editor bundle to mount at /")

    return p


def _cap_threads(n: int):
    if n and n > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(n)


def _cmd_synth(args) -> int:
    from . import dataset

    cfg = dataset.SynthConfig(resolution=args.res,
                              kelvin_range=(args.kelvin_min, args.kelvin_max))
    records = [dataset.render_synthetic(args.seed * 1_000_000 + i, cfg)
               for i in range(args.count)]
    dataset.build_manifest(records, args.out, seed=args.seed)
    if args.verbose:
        print(f"wrote {len(records)} scenes to {args.out}")
    return 0


def _cmd_train(args) -> int:
    from . import trainer

    cfg = trainer.TrainConfig(
        task=args.task, data_root=args.data, ckpt_dir=args.ckpt_out,
        epochs=args.epochs, lr=args.lr, batch_size=args.batch_size,
        seed=args.seed, decomposer_ckpt=args.decomposer,
        use_cycle=not args.no_cycle, base_width=args.base_width,
        sr_low_res=args.sr_low_res)
    report = trainer.train(cfg)
    last = report.rows[-1]
    print(f"trained {args.task}: {len(report.rows)} epochs, "
          f"final train {last['loss_total']:.6f}, val {last['val_total']:.6f}, "
          f"{report.wall_clock:.1f}s")
    print(f"loss csv: {report.csv_path}\nfinal checkpoint: {report.final_ckpt}")
    return 0


def _cmd_eval(args) -> int:
    from . import trainer

    table = trainer.evaluate(args.ckpt, args.data, args.split, sr_low_res=args.sr_low_res)
    text = json.dumps(table, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    print(json.dumps({"task": table["task"], "split": table["split"],
                      "count": table["count"], "mean": table["mean"]}, indent=2, sort_keys=True))
    return 0


def _load_scene(data_root, scene_id):
    from . import dataset

    for rec in dataset.load_manifest(data_root):
        if rec.id == scene_id:
            return rec
    raise ValueError(f"scene {scene_id!r} not found in {data_root}")


def _cmd_decompose(args) -> int:
    from pathlib import Path

    from . import formation, trainer

    rec = _load_scene(args.data, args.scene)
    d = trainer.infer_decompose(rec.P, rec.R, rec.depth, rec.normals, args.ckpt)
    out = Path(args.out) if args.out else Path(args.data) / rec.id / "decomp"
    formation.save_decomposition(d, out, source=rec.P)
    print(f"decomposition written to {out}")
    return 0


def _cmd_generate(args) -> int:
    from pathlib import Path

    from . import imgcore, trainer

    rec = _load_scene(args.data, args.scene)
    f_hat, p_hat = trainer.infer_generate(rec.A, rec.R, rec.depth, rec.normals,
                                          args.ckpt, kelvin=args.kelvin)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    imgcore.write_pfm(f_hat, out / "F.pfm")
    imgcore.write_pfm(p_hat, out / "P.pfm")
    imgcore.write_png(imgcore.srgb_encode(p_hat), out / "P.png")
    print(f"generated flash photograph written to {out}")
    return 0


def _cmd_relight(args) -> int:
    from pathlib import Path

    from . import formation, imgcore

    decomp_dir = Path(args.data) / args.scene / "decomp"
    if args.ground_truth or not decomp_dir.exists():
        rec = _load_scene(args.data, args.scene)
        d = formation.split_illuminations(rec.P, rec.S_A, rec.S_F, rec.ambient)
    else:
        d = formation.load_decomposition(decomp_dir)
    out = formation.relight(d, args.kappa, args.alpha, args.kelvin)
    imgcore.write_png(imgcore.srgb_encode(out), args.out)
    print(f"relit image written to {args.out}")
    return 0


def _cmd_sr(args) -> int:
    from . import highres, imgcore
    from .networks import ToyNet

    p_full = imgcore.read_pfm(args.input)
    a_low = imgcore.read_pfm(args.lowres)
    net = ToyNet.load(args.ckpt)
    out, ratio = highres.guided_sr(p_full, a_low, net, low_res=a_low.shape[0],
                                   full_res=p_full.shape[0], return_ratio=True)
    imgcore.write_pfm(out, args.out)
    if args.ratio_out:
        imgcore.write_pfm(ratio, args.ratio_out)
    print(f"high-resolution ambient written to {args.out}")
    return 0


def _cmd_serve(args) -> int:
    from . import service

    print(f"serving {args.data} on http://{args.bind}:{args.port}")
    service.serve(args.data, bind=args.bind, port=args.port, ui_dir=args.ui_dir)
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "decompose": _cmd_decompose,
    "generate": _cmd_generate,
    "relight": _cmd_relight,
    "sr": _cmd_sr,
    "serve": _cmd_serve,
}


def _validate_flag_pairs(args):
    # mutually required flags fail before any work starts
    if args.command == "train" and args.task == "generation" and not args.decomposer:
        raise _UsageError("train --task generation requires --decomposer")


def run(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        _validate_flag_pairs(args)
    except _UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        parser.print_help(sys.stderr)
        return 1
    _cap_threads(args.threads)
    try:
        return _COMMANDS[args.command](args)
    except Exception as e:  # runtime failures -> exit 2 with a message
        print(f"flashlab {args.command}: {e}", file=sys.stderr)
        return 2


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
