"""Train the flash decomposition network at toy scale and inspect what the
seven-term loss does: L1 + multi-scale gradient terms on both shadings and
on the implied albedo, plus the temperature term. The albedo term couples
all three heads through the formation equation.

This is a miniature of the full desk-scale run (which the acceptance suite
performs at 200 scenes / 64x64 / 30 epochs).

Run:  python3 demos/04_train_decomposition.py    (~1 minute)
"""

import tempfile
from pathlib import Path

import numpy as np

from flashlab import dataset, imgcore, trainer

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

root = Path(tempfile.mkdtemp(prefix="flashlab_demo_")) / "data"
records = [dataset.render_synthetic(s, dataset.SynthConfig(resolution=64))
           for s in range(40)]
dataset.build_manifest(records, root, (0.8, 0.1, 0.1), seed=0)

cfg = trainer.TrainConfig(
    task="decomposition", data_root=str(root), ckpt_dir=str(root.parent / "ckpt"),
    epochs=8, lr=2e-4, batch_size=4, seed=0, base_width=8, checkpoint_every=0)
report = trainer.train(cfg)

print("loss trajectory (per-epoch means):")
for row in report.rows:
    print(f"  epoch {row['epoch']:2d}: train {row['loss_total']:.4f}  "
          f"val {row['val_total']:.4f}  (L_T {row['l_t']:.4f})")
print("validation metrics:")
for output, scores in report.final_val.items():
    print(f"  {output}: " + ", ".join(f"{m} {v:.2f}" for m, v in scores.items()))
print(f"wall clock: {report.wall_clock:.1f}s")

# decompose a held-out scene and save a visual comparison
rec = [r for r in dataset.load_manifest(root) if r.split == "test"][0]
d = trainer.infer_decompose(rec.P, rec.R, rec.depth, rec.normals, report.final_ckpt)
print(f"estimated ambient {d.ambient.kelvin:.0f} K vs true {rec.kelvin:.0f} K")
strip = np.concatenate([rec.P, d.A, rec.A, d.F, rec.F], axis=1)
imgcore.write_png(imgcore.srgb_encode(strip), OUT / "decomposition_strip.png")
print("wrote", OUT / "decomposition_strip.png",
      "| panels: P, A_hat, A, F_hat, F")
