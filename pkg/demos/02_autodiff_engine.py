"""Tour of the reverse-mode autodiff engine the training stack runs on.

Run:  python3 demos/02_autodiff_engine.py
"""

import numpy as np

from flashlab import autodiff as ad
from flashlab.autodiff import Tensor

# build a small graph and backpropagate
x = Tensor(np.array([1.0, 2.0, 3.0]), requires_grad=True)
loss = ad.tmean(x * x)
loss.backward()
print("d mean(x^2)/dx =", x.grad, "(expected [2/3, 4/3, 2])")

# epsilon-guarded division: the denominator never drops below 1e-6
den = Tensor(np.array([0.5, 1e-9]))
print("guarded 1/den =", ad.div(1.0, den).data)

# every op carries a backward rule; grad_check compares against central
# finite differences (64-bit mode for tight tolerances)
with ad.precision("float64"):
    x0 = Tensor(np.random.default_rng(0).uniform(0.5, 1.5, (4, 4)))
    err = ad.grad_check(lambda v: ad.tmean(ad.sigmoid(v) * ad.softplus(v)), x0)
    print(f"grad_check(sigmoid*softplus): max rel error {err:.2e}")

    w = Tensor(np.random.default_rng(1).normal(size=(2, 3, 3, 3)))
    err = ad.grad_check(
        lambda v: ad.tmean(ad.absolute(ad.conv2d(v, w, stride=1, pad=1))),
        Tensor(np.random.default_rng(2).normal(size=(1, 3, 8, 8))))
    print(f"grad_check(conv2d):          max rel error {err:.2e}")

# Adam drives a quadratic to its minimum
p = Tensor(np.array([0.0]), requires_grad=True)
state = ad.adam_init([p])
for step in range(300):
    p.zero_grad()
    ((p - 3.0) * (p - 3.0)).sum().backward()
    ad.adam_step([p], state, lr=0.1)
print(f"Adam on (x-3)^2 after 300 steps: x = {float(p.data[0]):.6f}")

# checkpoints round-trip bit-exactly
import tempfile

params = {"layer.w": np.random.default_rng(3).normal(size=(4, 4)).astype(np.float32)}
with tempfile.NamedTemporaryFile(suffix=".ckpt") as f:
    ad.save_checkpoint(f.name, params, {"note": "demo"})
    loaded, cfg = ad.load_checkpoint(f.name)
print("checkpoint bit-exact:", np.array_equal(loaded["layer.w"], params["layer.w"]),
      "| config:", cfg)
