"""Minimal reverse-mode autodiff over numpy arrays.

The op set is exactly what the formation equations, the losses, and the toy
networks need: elementwise arithmetic with epsilon-guarded division,
relu/leaky-relu/sigmoid/softplus, full reductions, global average pooling,
concat/slice/reshape, x2 up/downsampling, conv2d (stride 1 or 2, zero
padding) and matmul+bias. Every op registers a backward rule; `grad_check`
validates all of them against central finite differences.

Storage is float32 by default; reductions accumulate in float64. Tests run
the whole engine in float64 via `precision("float64")`.
"""

from __future__ import annotations

import contextlib
import json
import struct

import numpy as np

EPS = 1e-6  # denominator guard used by div in forward and backward

_DEFAULT_DTYPE = np.float32


def default_dtype():
    return _DEFAULT_DTYPE


@contextlib.contextmanager
def precision(dtype):
    """Temporarily switch the default tensor dtype ("float32"/"float64")."""
    global _DEFAULT_DTYPE
    old = _DEFAULT_DTYPE
    _DEFAULT_DTYPE = np.dtype(dtype).type
    try:
        yield
    finally:
        _DEFAULT_DTYPE = old


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a gradient back down to `shape` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _sigmoid_np(d: np.ndarray) -> np.ndarray:
    out = np.empty_like(d)
    pos = d >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-d[pos]))
    e = np.exp(d[~pos])
    out[~pos] = e / (1.0 + e)
    return out


class Tensor:
    """Value node of the backward graph.

    `_backward(g, sink)` routes the incoming gradient g to the parents via
    sink(parent, value). The backward sweep keeps per-node gradients in a
    transient table, so repeated backward() calls accumulate exactly one
    dLoss/dLeaf contribution each into `.grad`.
    """

    __slots__ = ("data", "grad", "requires_grad", "op", "_parents", "_backward")
    __array_ufunc__ = None  # keep numpy from hijacking ndarray (op) Tensor

    def __init__(self, data, requires_grad=False, op="leaf", parents=(), backward=None):
        self.data = np.asarray(data, dtype=_DEFAULT_DTYPE)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.op = op
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, g):
        g = np.asarray(g, dtype=self.data.dtype)
        if self.grad is None:
            self.grad = g.reshape(self.data.shape).copy()
        else:
            self.grad += g.reshape(self.data.shape)

    def __repr__(self):
        return f"Tensor(op={self.op!r}, shape={self.data.shape}, grad={self.grad is not None})"

    @staticmethod
    def _lift(x) -> "Tensor":
        return x if isinstance(x, Tensor) else Tensor(np.asarray(x))

    def backward(self):
        """Reverse-mode sweep from a scalar loss; accumulates into .grad."""
        if self.size != 1:
            raise ValueError(f"backward needs a scalar loss, got shape {self.shape}")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:  # iterative post-order; graphs can be deep
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))

        table: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}

        def sink(t: "Tensor", val: np.ndarray):
            key = id(t)
            if key in table:
                table[key] = table[key] + val
            else:
                table[key] = val

        for node in reversed(order):
            g = table.pop(id(node), None)
            if g is None:
                continue
            if node.requires_grad:
                node._accumulate(g)
            if node._backward is not None:
                node._backward(g, sink)

    # operator sugar (functions are defined below in this module)
    def __add__(self, o):
        return add(self, o)

    def __radd__(self, o):
        return add(o, self)

    def __sub__(self, o):
        return sub(self, o)

    def __rsub__(self, o):
        return sub(o, self)

    def __mul__(self, o):
        return mul(self, o)

    def __rmul__(self, o):
        return mul(o, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __truediv__(self, o):
        return div(self, o)

    def __rtruediv__(self, o):
        return div(o, self)

    def __getitem__(self, key):
        return tslice(self, key)

    def sum(self):
        return tsum(self)

    def mean(self):
        return tmean(self)

    def reshape(self, shape):
        return reshape(self, shape)

    def abs(self):
        return absolute(self)

    def relu(self):
        return relu(self)

    def sigmoid(self):
        return sigmoid(self)

    def softplus(self):
        return softplus(self)


def _binary(op_name, a, b, fwd, bwd_a, bwd_b) -> Tensor:
    a, b = Tensor._lift(a), Tensor._lift(b)
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ValueError(f"{op_name}: incompatible shapes {a.shape} and {b.shape}") from None
    out_data = fwd(a.data, b.data)
    if not (a.requires_grad or b.requires_grad):
        return Tensor(out_data, op=op_name)

    def backward(g, sink):
        if a.requires_grad:
            sink(a, _unbroadcast(bwd_a(g, a.data, b.data), a.shape))
        if b.requires_grad:
            sink(b, _unbroadcast(bwd_b(g, a.data, b.data), b.shape))

    return Tensor(out_data, requires_grad=True, op=op_name, parents=(a, b), backward=backward)


def _unary(op_name, x, fwd, bwd) -> Tensor:
    x = Tensor._lift(x)
    out_data = fwd(x.data)
    if not x.requires_grad:
        return Tensor(out_data, op=op_name)

    def backward(g, sink):
        sink(x, bwd(g, x.data, out_data))

    return Tensor(out_data, requires_grad=True, op=op_name, parents=(x,), backward=backward)


# ---------------------------------------------------------------------------
# Elementwise ops
# ---------------------------------------------------------------------------

def add(a, b):
    return _binary("add", a, b, lambda x, y: x + y, lambda g, x, y: g, lambda g, x, y: g)


def sub(a, b):
    return _binary("sub", a, b, lambda x, y: x - y, lambda g, x, y: g, lambda g, x, y: -g)


def mul(a, b):
    return _binary("mul", a, b, lambda x, y: x * y, lambda g, x, y: g * y, lambda g, x, y: g * x)


def div(a, b):
    """a * (1 / max(b, EPS)) in both forward and backward."""
    return _binary(
        "div", a, b,
        lambda x, y: x / np.maximum(y, EPS),
        lambda g, x, y: g / np.maximum(y, EPS),
        lambda g, x, y: -g * x / np.maximum(y, EPS) ** 2 * (y >= EPS),
    )


def absolute(x):
    # subgradient at 0 is 0 (np.sign(0) == 0)
    return _unary("abs", x, np.abs, lambda g, xd, od: g * np.sign(xd))


def relu(x):
    return _unary("relu", x, lambda d: np.maximum(d, 0), lambda g, xd, od: g * (xd > 0))


def leaky_relu(x, slope=0.1):
    return _unary(
        "leaky_relu", x,
        lambda d: np.where(d > 0, d, d * np.asarray(slope, dtype=d.dtype)),
        lambda g, xd, od: np.where(xd > 0, g, g * np.asarray(slope, dtype=g.dtype)),
    )


def sigmoid(x):
    return _unary("sigmoid", x, _sigmoid_np, lambda g, xd, od: g * od * (1.0 - od))


def softplus(x):
    def fwd(d):
        return np.log1p(np.exp(-np.abs(d))) + np.maximum(d, 0)

    return _unary("softplus", x, fwd, lambda g, xd, od: g * _sigmoid_np(xd))


def affine(x, a, b):
    """Scalar affine a*x + b with python-float a, b."""
    a, b = float(a), float(b)
    return _unary("affine", x, lambda d: a * d + b, lambda g, xd, od: g * a)


# ---------------------------------------------------------------------------
# Reductions (64-bit accumulation)
# ---------------------------------------------------------------------------

def tsum(x):
    x = Tensor._lift(x)
    val = np.asarray(x.data.sum(dtype=np.float64), dtype=x.data.dtype)
    if not x.requires_grad:
        return Tensor(val, op="sum")

    def backward(g, sink):
        sink(x, np.full_like(x.data, g))

    return Tensor(val, requires_grad=True, op="sum", parents=(x,), backward=backward)


def tmean(x):
    x = Tensor._lift(x)
    val = np.asarray(x.data.mean(dtype=np.float64), dtype=x.data.dtype)
    if not x.requires_grad:
        return Tensor(val, op="mean")

    def backward(g, sink):
        sink(x, np.full_like(x.data, g / x.size))

    return Tensor(val, requires_grad=True, op="mean", parents=(x,), backward=backward)


def global_avg_pool(x):
    """(N, C, H, W) -> (N, C) mean over the spatial axes."""
    x = Tensor._lift(x)
    n, c, h, w = x.shape
    val = x.data.mean(axis=(2, 3), dtype=np.float64).astype(x.data.dtype)
    if not x.requires_grad:
        return Tensor(val, op="gap")

    def backward(g, sink):
        sink(x, np.broadcast_to(g[:, :, None, None] / (h * w), x.shape).astype(x.data.dtype))

    return Tensor(val, requires_grad=True, op="gap", parents=(x,), backward=backward)


# ---------------------------------------------------------------------------
# Structural ops
# ---------------------------------------------------------------------------

def concat(tensors, axis=1):
    tensors = [Tensor._lift(t) for t in tensors]
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    if not any(t.requires_grad for t in tensors):
        return Tensor(out_data, op="concat")
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g, sink):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                sink(t, g[tuple(idx)])

    return Tensor(out_data, requires_grad=True, op="concat", parents=tuple(tensors), backward=backward)


def tslice(x, key):
    x = Tensor._lift(x)
    out_data = x.data[key]
    if not x.requires_grad:
        return Tensor(out_data, op="slice")

    def backward(g, sink):
        buf = np.zeros_like(x.data)
        buf[key] = g  # basic slicing only, so assignment hits each element once
        sink(x, buf)

    return Tensor(out_data, requires_grad=True, op="slice", parents=(x,), backward=backward)


def reshape(x, shape):
    x = Tensor._lift(x)
    out_data = x.data.reshape(shape)
    if not x.requires_grad:
        return Tensor(out_data, op="reshape")

    def backward(g, sink):
        sink(x, g.reshape(x.shape))

    return Tensor(out_data, requires_grad=True, op="reshape", parents=(x,), backward=backward)


def broadcast_to(x, shape):
    x = Tensor._lift(x)
    out_data = np.broadcast_to(x.data, shape).copy()
    if not x.requires_grad:
        return Tensor(out_data, op="broadcast")

    def backward(g, sink):
        sink(x, _unbroadcast(g, x.shape))

    return Tensor(out_data, requires_grad=True, op="broadcast", parents=(x,), backward=backward)


def avg_pool2(x):
    """2x2 average pooling, stride 2, on (N, C, H, W) with even H, W."""
    x = Tensor._lift(x)
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ValueError(f"avg_pool2 needs even spatial dims, got {h}x{w}")
    out_data = x.data.reshape(n, c, h // 2, 2, w // 2, 2).mean(axis=(3, 5))
    if not x.requires_grad:
        return Tensor(out_data, op="avg_pool2")

    def backward(g, sink):
        sink(x, np.repeat(np.repeat(g, 2, axis=2), 2, axis=3) * 0.25)

    return Tensor(out_data, requires_grad=True, op="avg_pool2", parents=(x,), backward=backward)


def upsample2_nearest(x):
    x = Tensor._lift(x)
    out_data = np.repeat(np.repeat(x.data, 2, axis=2), 2, axis=3)
    if not x.requires_grad:
        return Tensor(out_data, op="up2_nearest")

    def backward(g, sink):
        n, c, h2, w2 = g.shape
        sink(x, g.reshape(n, c, h2 // 2, 2, w2 // 2, 2).sum(axis=(3, 5)))

    return Tensor(out_data, requires_grad=True, op="up2_nearest", parents=(x,), backward=backward)


_BILINEAR_CACHE: dict = {}


def _bilinear2_matrix(n_in: int) -> np.ndarray:
    # x2 upsampling weights with half-pixel centers (matches imgcore.resize)
    if n_in not in _BILINEAR_CACHE:
        from .imgcore import _bilinear_weights

        _BILINEAR_CACHE[n_in] = _bilinear_weights(n_in, 2 * n_in)
    return _BILINEAR_CACHE[n_in]


def upsample2_bilinear(x):
    x = Tensor._lift(x)
    n, c, h, w = x.shape
    wy = _bilinear2_matrix(h).astype(x.data.dtype)
    wx = _bilinear2_matrix(w).astype(x.data.dtype)
    out_data = np.einsum("ij,ncjk,lk->ncil", wy, x.data, wx, optimize=True)
    if not x.requires_grad:
        return Tensor(out_data, op="up2_bilinear")

    def backward(g, sink):
        sink(x, np.einsum("ij,ncik,kl->ncjl", wy, g, wx, optimize=True))

    return Tensor(out_data, requires_grad=True, op="up2_bilinear", parents=(x,), backward=backward)


# ---------------------------------------------------------------------------
# Dense ops
# ---------------------------------------------------------------------------

def _im2col_nhwc(xp: np.ndarray, kh: int, kw: int, stride: int):
    # tap-wise gather into (N*Ho*Wo, kh*kw*C); each tap is a cheap 4-D copy
    n, hp, wp, c = xp.shape
    ho = (hp - kh) // stride + 1
    wo = (wp - kw) // stride + 1
    cols = np.empty((n, ho, wo, kh, kw, c), dtype=xp.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, :, i, j, :] = xp[:, i : i + stride * ho : stride, j : j + stride * wo : stride, :]
    return cols.reshape(n * ho * wo, kh * kw * c), ho, wo


def conv2d(x, w, b=None, stride=1, pad=0):
    """2D convolution (cross-correlation) on (N, Cin, H, W) with kernel
    (Cout, Cin, kh, kw), zero padding, stride 1 or 2."""
    x, w = Tensor._lift(x), Tensor._lift(w)
    if stride not in (1, 2):
        raise ValueError(f"conv2d stride must be 1 or 2, got {stride}")
    if x.data.ndim != 4 or w.data.ndim != 4 or x.shape[1] != w.shape[1]:
        raise ValueError(f"conv2d: incompatible shapes {x.shape} and {w.shape}")
    b = Tensor._lift(b) if b is not None else None
    n, cin, h, wd = x.shape
    cout, _, kh, kw = w.shape
    x_nhwc = np.ascontiguousarray(x.data.transpose(0, 2, 3, 1))
    xp = np.pad(x_nhwc, ((0, 0), (pad, pad), (pad, pad), (0, 0))) if pad else x_nhwc
    cols, ho, wo = _im2col_nhwc(xp, kh, kw, stride)
    wmat = np.ascontiguousarray(w.data.transpose(2, 3, 1, 0).reshape(kh * kw * cin, cout))
    out = cols @ wmat
    if b is not None:
        out += b.data
    out_data = np.ascontiguousarray(out.reshape(n, ho, wo, cout).transpose(0, 3, 1, 2))
    req = x.requires_grad or w.requires_grad or (b is not None and b.requires_grad)
    if not req:
        return Tensor(out_data, op="conv2d")

    def backward(g, sink):
        gcols = np.ascontiguousarray(g.transpose(0, 2, 3, 1)).reshape(n * ho * wo, cout)
        if b is not None and b.requires_grad:
            sink(b, gcols.sum(axis=0, dtype=np.float64).astype(b.data.dtype))
        if w.requires_grad:
            dwmat = cols.T @ gcols  # (kh*kw*cin, cout)
            sink(w, dwmat.reshape(kh, kw, cin, cout).transpose(3, 2, 0, 1))
        if x.requires_grad:
            dcols = (gcols @ wmat.T).reshape(n, ho, wo, kh, kw, cin)
            dxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    dxp[:, i : i + stride * ho : stride, j : j + stride * wo : stride, :] += (
                        dcols[:, :, :, i, j, :]
                    )
            dx = dxp[:, pad : pad + h, pad : pad + wd, :] if pad else dxp
            sink(x, dx.transpose(0, 3, 1, 2))

    parents = (x, w) if b is None else (x, w, b)
    return Tensor(out_data, requires_grad=True, op="conv2d", parents=parents, backward=backward)


def matmul_bias(x, w, b):
    """(N, K) @ (K, M) + (M,)"""
    x, w, b = Tensor._lift(x), Tensor._lift(w), Tensor._lift(b)
    if x.data.ndim != 2 or w.data.ndim != 2 or x.shape[1] != w.shape[0]:
        raise ValueError(f"matmul_bias: incompatible shapes {x.shape} and {w.shape}")
    out_data = x.data @ w.data + b.data
    if not (x.requires_grad or w.requires_grad or b.requires_grad):
        return Tensor(out_data, op="matmul_bias")

    def backward(g, sink):
        if x.requires_grad:
            sink(x, g @ w.data.T)
        if w.requires_grad:
            sink(w, x.data.T @ g)
        if b.requires_grad:
            sink(b, g.sum(axis=0, dtype=np.float64).astype(b.data.dtype))

    return Tensor(out_data, requires_grad=True, op="matmul_bias", parents=(x, w, b), backward=backward)


# ---------------------------------------------------------------------------
# Gradient checking
# ---------------------------------------------------------------------------

def grad_check(fn, x: Tensor, h=None) -> float:
    """Max relative error between analytic and central-difference gradients.

    Relative error per element is |analytic - numeric| / max(1, |numeric|).
    Step defaults to 1e-4 * max(1, |x_i|) per element. Callers wanting tight
    tolerances should build x under precision("float64").
    """
    x = Tensor(x.data.copy(), requires_grad=True)
    out = fn(x)
    if not isinstance(out, Tensor) or out.size != 1:
        raise ValueError("grad_check: fn must return a scalar Tensor")
    out.backward()
    analytic = x.grad.copy()

    flat = x.data.reshape(-1)
    numeric = np.zeros_like(flat)
    for i in range(flat.size):
        hi = float(h) if h is not None else 1e-4 * max(1.0, abs(float(flat[i])))
        orig = flat[i]
        hi = float((orig + hi) - orig) or hi  # snap to a representable step
        flat[i] = orig + hi
        fp = float(fn(Tensor(x.data.copy())).data)
        flat[i] = orig - hi
        fm = float(fn(Tensor(x.data.copy())).data)
        flat[i] = orig
        numeric[i] = (fp - fm) / (2 * hi)
    err = np.abs(analytic.reshape(-1) - numeric) / np.maximum(1.0, np.abs(numeric))
    return float(err.max())


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

def adam_init(params) -> dict:
    return {
        "m": [np.zeros_like(p.data) for p in params],
        "v": [np.zeros_like(p.data) for p in params],
        "t": 0,
    }


def adam_step(params, state, lr, betas=(0.9, 0.999), eps=1e-8):
    """One standard Adam update with bias correction; mutates params+state."""
    b1, b2 = betas
    state["t"] += 1
    t = state["t"]
    for i, p in enumerate(params):
        if p.grad is None:
            raise ValueError(f"adam_step: parameter {i} has no gradient")
        g = p.grad
        state["m"][i] = b1 * state["m"][i] + (1 - b1) * g
        state["v"][i] = b2 * state["v"][i] + (1 - b2) * g * g
        mhat = state["m"][i] / (1 - b1 ** t)
        vhat = state["v"][i] / (1 - b2 ** t)
        p.data -= (lr * mhat / (np.sqrt(vhat) + eps)).astype(p.data.dtype)


class Adam:
    """Thin stateful wrapper over adam_step for training loops."""

    def __init__(self, params, lr, betas=(0.9, 0.999), eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.state = adam_init(self.params)

    def step(self):
        adam_step(self.params, self.state, self.lr, self.betas, self.eps)

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()


# ---------------------------------------------------------------------------
# Parameter checkpoints
# ---------------------------------------------------------------------------

_CKPT_MAGIC = b"FLCKPT1\n"


def save_checkpoint(path, named_params: dict, config: dict | None = None) -> None:
    """Binary checkpoint: magic, version, config JSON, then per-tensor
    (name, rank, dims, raw little-endian float32 payload). Bit-exact."""
    cfg = json.dumps(config or {}, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_CKPT_MAGIC)
        f.write(struct.pack("<I", 1))
        f.write(struct.pack("<I", len(cfg)))
        f.write(cfg)
        f.write(struct.pack("<I", len(named_params)))
        for name, value in named_params.items():
            arr = value.data if isinstance(value, Tensor) else np.asarray(value)
            arr = arr.astype("<f4", copy=False)
            nb = name.encode("utf-8")
            f.write(struct.pack("<I", len(nb)))
            f.write(nb)
            f.write(struct.pack("<I", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(np.ascontiguousarray(arr).tobytes())


def load_checkpoint(path):
    """Returns (named_params: dict[str, float32 array], config: dict)."""
    with open(path, "rb") as f:
        if f.read(len(_CKPT_MAGIC)) != _CKPT_MAGIC:
            raise ValueError(f"{path}: not a flashlab checkpoint")
        (version,) = struct.unpack("<I", f.read(4))
        if version != 1:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        (cfg_len,) = struct.unpack("<I", f.read(4))
        config = json.loads(f.read(cfg_len).decode("utf-8"))
        (count,) = struct.unpack("<I", f.read(4))
        params = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<I", f.read(4))
            name = f.read(name_len).decode("utf-8")
            (rank,) = struct.unpack("<I", f.read(4))
            dims = struct.unpack(f"<{rank}I", f.read(4 * rank))
            n = int(np.prod(dims)) if rank else 1
            params[name] = np.frombuffer(f.read(4 * n), dtype="<f4").reshape(dims).copy()
    return params, config
