import numpy as np
import pytest

from flashlab import autodiff as ad
from flashlab import losses, networks
from flashlab.autodiff import Tensor
from flashlab.networks import EncoderDecoderConfig, ToyNet


SMALL_DEC = EncoderDecoderConfig(in_channels=10, heads=2, temperature_head=True,
                                 base_width=4, levels=2)
SMALL_GEN = EncoderDecoderConfig(in_channels=7, heads=1, base_width=4, levels=2)


def test_decomposition_shapes_and_ranges():
    net = ToyNet.create(SMALL_DEC, seed=0)
    x = Tensor(np.random.default_rng(1).normal(size=(2, 10, 16, 16)).astype(np.float32))
    s_a, s_f, t = networks.decomposition_forward(net, x)
    assert s_a.shape == (2, 1, 16, 16)
    assert s_f.shape == (2, 1, 16, 16)
    assert t.shape == (2, 1)
    assert s_a.data.min() >= 0 and s_f.data.min() >= 0
    assert 0 < t.data.min() and t.data.max() < 1


def test_generation_shape_and_nonnegativity():
    net = ToyNet.create(SMALL_GEN, seed=2)
    x = Tensor(np.random.default_rng(3).normal(size=(1, 7, 16, 16)).astype(np.float32))
    s_f = networks.generation_forward(net, x)
    assert s_f.shape == (1, 1, 16, 16)
    assert s_f.data.min() >= 0


def test_forward_config_guards():
    dec = ToyNet.create(SMALL_DEC, seed=0)
    gen = ToyNet.create(SMALL_GEN, seed=0)
    x7 = Tensor(np.zeros((1, 7, 16, 16), dtype=np.float32))
    x10 = Tensor(np.zeros((1, 10, 16, 16), dtype=np.float32))
    with pytest.raises(ValueError, match="channels"):
        dec.forward(x7)
    with pytest.raises(ValueError, match="2-head"):
        networks.decomposition_forward(gen, x7)
    with pytest.raises(ValueError, match="1-head"):
        networks.generation_forward(dec, x10)
    with pytest.raises(ValueError, match="divisible"):
        gen.forward(Tensor(np.zeros((1, 7, 10, 10), dtype=np.float32)))


def test_gradient_reaches_every_parameter():
    net = ToyNet.create(SMALL_GEN, seed=4)
    x = Tensor(np.random.default_rng(5).normal(size=(1, 7, 8, 8)).astype(np.float32))
    out = networks.generation_forward(net, x)
    ad.tmean(out).backward()
    for name, p in net.params.items():
        assert p.grad is not None, name
        assert float(np.abs(p.grad).sum()) > 0, name


def test_init_deterministic_and_seed_sensitive():
    a = networks.init_parameters(SMALL_DEC, seed=7)
    b = networks.init_parameters(SMALL_DEC, seed=7)
    c = networks.init_parameters(SMALL_DEC, seed=8)
    assert all(np.array_equal(a[k], b[k]) for k in a)
    assert any(not np.array_equal(a[k], c[k]) for k in a)
    # conv biases start at zero
    assert all(np.all(v == 0) for k, v in a.items() if k.endswith(".b"))
    x = Tensor(np.random.default_rng(9).normal(size=(1, 10, 8, 8)).astype(np.float32))
    out_a = ToyNet(SMALL_DEC, a).forward(x)
    out_c = ToyNet(SMALL_DEC, c).forward(x)
    assert not np.array_equal(out_a[0].data, out_c[0].data)


def test_checkpoint_round_trip_reproduces_forward(tmp_path):
    net = ToyNet.create(SMALL_DEC, seed=10)
    path = tmp_path / "net.ckpt"
    net.save(path)
    twin = ToyNet.load(path)
    assert twin.config == net.config
    for k in net.params:
        assert np.array_equal(twin.params[k].data, net.params[k].data), k
    x = Tensor(np.random.default_rng(11).normal(size=(1, 10, 16, 16)).astype(np.float32))
    out_a = net.forward(x)
    out_b = twin.forward(x)
    for ya, yb in zip(out_a, out_b):
        assert np.array_equal(ya.data, yb.data)


def test_end_to_end_gradcheck_through_loss():
    # small net, 8x8 input, 64-bit: decomposition forward + full loss
    with ad.precision("float64"):
        cfg = EncoderDecoderConfig(in_channels=10, heads=2, temperature_head=True,
                                   base_width=2, levels=2)
        net = ToyNet.create(cfg, seed=12)
        rng = np.random.default_rng(13)
        truth = {
            "S_A": Tensor(rng.uniform(0.2, 1.0, (1, 1, 8, 8))),
            "S_F": Tensor(rng.uniform(0.2, 1.0, (1, 1, 8, 8))),
            "R": Tensor(rng.uniform(0.1, 0.9, (1, 3, 8, 8))),
            "t_norm": Tensor(np.array([[0.4]])),
        }
        P = Tensor(rng.uniform(0.1, 1.0, (1, 3, 8, 8)))
        x0 = Tensor(rng.uniform(-0.5, 0.5, (1, 10, 8, 8)))

        def fn(v):
            s_a, s_f, t = networks.decomposition_forward(net, v)
            total, _ = losses.decomposition_loss(
                {"S_A": s_a, "S_F": s_f, "t_norm": t}, truth, P)
            return total

        assert ad.grad_check(fn, x0) < 1e-3
