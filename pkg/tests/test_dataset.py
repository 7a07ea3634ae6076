import numpy as np
import pytest

from flashlab import dataset, formation, imgcore


def test_render_deterministic_per_seed():
    a = dataset.render_synthetic(42)
    b = dataset.render_synthetic(42)
    for name in dataset.COMPONENT_NAMES:
        assert np.array_equal(getattr(a, name), getattr(b, name)), name
    assert a.kelvin == b.kelvin
    c = dataset.render_synthetic(43)
    assert not np.array_equal(a.P, c.P)


def test_render_construction_identities():
    for seed in range(5):
        rec = dataset.render_synthetic(seed, dataset.SynthConfig(resolution=32))
        assert np.abs(rec.P - rec.A - rec.F).max() < 1e-6
        c = rec.ambient.c_A.astype(np.float32)
        assert np.abs(rec.A - rec.R * (c * rec.S_A)).max() < 1e-6
        assert np.abs(rec.F - rec.R * rec.S_F).max() < 1e-6


def test_render_geometry_invariants():
    rec = dataset.render_synthetic(7)
    assert np.abs(np.linalg.norm(rec.normals, axis=2) - 1.0).max() < 1e-4
    assert rec.depth.min() > 0
    assert rec.S_A.min() >= 0 and rec.S_F.min() >= 0
    assert 0.05 <= rec.R.min() and rec.R.max() <= 0.95


def test_render_implied_albedo_round_trip():
    rec = dataset.render_synthetic(11)
    r_hat, valid = formation.implied_albedo(rec.P, rec.S_A, rec.S_F, rec.ambient,
                                            return_mask=True)
    assert valid.all()
    assert np.abs(r_hat - rec.R)[valid].max() < 1e-5


def test_render_rejects_degenerate_config():
    with pytest.raises(ValueError):
        dataset.SynthConfig(resolution=8)
    with pytest.raises(ValueError):
        dataset.SynthConfig(min_objects=0)
    with pytest.raises(ValueError):
        dataset.SynthConfig(kelvin_range=(1500, 9000))


# ---------------------------------------------------------------------------
# chroma key + compositing
# ---------------------------------------------------------------------------

def test_chroma_key_fixed_points():
    key = (0.0, 0.8, 0.0)
    img = np.zeros((1, 2, 3), dtype=np.float32)
    img[0, 0] = key  # exactly the key color
    img[0, 1] = (1.0, 0.0, 1.0)  # far from the key color
    alpha = dataset.chroma_key(img, key_color=key)
    assert alpha[0, 0, 0] == 0.0
    assert alpha[0, 1, 0] == 1.0


def test_chroma_key_gray_square_card():
    card = np.zeros((16, 16, 3), dtype=np.float32)
    card[:] = (0.0, 0.8, 0.0)
    card[4:12, 4:12] = 0.5  # gray square, distance ~0.66 from key
    alpha = dataset.chroma_key(card)
    indicator = np.zeros((16, 16))
    indicator[4:12, 4:12] = 1.0
    assert np.array_equal(alpha[:, :, 0] > 0.5, indicator.astype(bool))
    assert alpha[0, 0, 0] == 0.0 and alpha[8, 8, 0] == 1.0


def test_composite_pair_endpoints_and_midpoint():
    rng = np.random.default_rng(0)
    shape = (8, 8, 3)
    fgp, fga, bgp, bga = (rng.uniform(0, 1, shape).astype(np.float32) for _ in range(4))
    ones = np.ones((8, 8, 1), dtype=np.float32)
    p, a = dataset.composite_pair(fgp, fga, ones, bgp, bga)
    assert np.array_equal(p, fgp) and np.array_equal(a, fga)
    p, a = dataset.composite_pair(fgp, fga, ones * 0, bgp, bga)
    assert np.array_equal(p, bgp) and np.array_equal(a, bga)
    p, a = dataset.composite_pair(fgp, fga, ones * 0.5, bgp, bga)
    assert np.abs(p - (fgp + bgp) / 2).max() < 1e-7
    assert np.abs(a - (fga + bga) / 2).max() < 1e-7


def test_normalize_brightness_hits_target_and_commutes_with_scaling():
    rng = np.random.default_rng(1)
    p = rng.uniform(0.1, 1.0, (16, 16, 3)).astype(np.float32)
    a = rng.uniform(0.05, 0.8, (16, 16, 3)).astype(np.float32)
    p1, a1 = dataset.normalize_brightness((p, a), target=0.25)
    assert float(np.median(imgcore.luminance(a1))) == pytest.approx(0.25, abs=1e-6)
    # pre-scaling the pair by 3 must not change the result
    p2, a2 = dataset.normalize_brightness((p * 3, a * 3), target=0.25)
    assert np.abs(p1 - p2).max() < 1e-6
    assert np.abs(a1 - a2).max() < 1e-6
    # the shared scalar preserves P = A + F structure: P/A ratio unchanged
    assert np.abs(p1 / a1 - p / a).max() < 1e-4


def test_normalize_brightness_unchanged_at_target():
    rng = np.random.default_rng(2)
    a = rng.uniform(0.1, 0.4, (16, 16, 3)).astype(np.float32)
    med = float(np.median(imgcore.luminance(a)))
    p = a * 2
    p1, a1 = dataset.normalize_brightness((p, a), target=med)
    assert np.abs(a1 - a).max() < 1e-6


def test_normalize_brightness_rejects_black():
    black = np.zeros((8, 8, 3), dtype=np.float32)
    with pytest.raises(ValueError, match="median"):
        dataset.normalize_brightness((black, black))


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------

def test_split_counts_and_determinism():
    splits = dataset.assign_splits(10, (0.8, 0.1, 0.1), seed=3)
    assert splits.count("train") == 8
    assert splits.count("val") == 1
    assert splits.count("test") == 1
    assert splits == dataset.assign_splits(10, (0.8, 0.1, 0.1), seed=3)
    assert splits != dataset.assign_splits(10, (0.8, 0.1, 0.1), seed=4)


def test_split_ratio_validation():
    with pytest.raises(ValueError, match="sum"):
        dataset.assign_splits(10, (0.8, 0.3, 0.1))


def test_manifest_round_trip_bit_exact(tmp_path):
    records = [dataset.render_synthetic(s, dataset.SynthConfig(resolution=16))
               for s in range(6)]
    manifest = dataset.build_manifest(records, tmp_path, (0.5, 0.25, 0.25), seed=0)
    assert len(manifest["records"]) == 6
    back = {r.id: r for r in dataset.load_manifest(tmp_path)}
    for rec in records:
        twin = back[rec.id]
        for name in dataset.COMPONENT_NAMES:
            assert np.array_equal(getattr(twin, name), getattr(rec, name)), name
        assert twin.split == rec.split
        assert twin.kelvin == pytest.approx(rec.kelvin)


def test_manifest_rejects_duplicate_ids(tmp_path):
    rec = dataset.render_synthetic(1, dataset.SynthConfig(resolution=16))
    with pytest.raises(ValueError, match="duplicate"):
        dataset.build_manifest([rec, rec], tmp_path)


def test_manifest_missing_file_detected(tmp_path):
    records = [dataset.render_synthetic(s, dataset.SynthConfig(resolution=16))
               for s in range(2)]
    dataset.build_manifest(records, tmp_path, seed=0)
    (tmp_path / records[0].id / "R.pfm").unlink()
    with pytest.raises(FileNotFoundError):
        dataset.load_manifest(tmp_path)
