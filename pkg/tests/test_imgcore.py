import numpy as np
import pytest

from flashlab import imgcore
from flashlab.imgcore import Resampler


# ---------------------------------------------------------------------------
# sRGB transfer
# ---------------------------------------------------------------------------

def test_srgb_decode_fixed_points():
    codes = np.array([[0, 255, 188]], dtype=np.uint8)
    lin = imgcore.srgb_decode(codes)
    assert lin[0, 0, 0] == 0.0
    assert lin[0, 1, 0] == 1.0
    # frozen from a direct evaluation of ((188/255 + 0.055)/1.055)**2.4
    assert lin[0, 2, 0] == pytest.approx(0.5028864580325687, abs=1e-7)


def test_srgb_encode_reference_values():
    img = np.array([[[0.0], [1.0], [2.0], [-0.5], [0.5]]], dtype=np.float32)
    enc = imgcore.srgb_encode(img)
    assert enc[0, 0, 0] == 0
    assert enc[0, 1, 0] == 255
    assert enc[0, 2, 0] == 255  # over-range clamps
    assert enc[0, 3, 0] == 0  # negative clamps
    # frozen: inverse EOTF of 0.5 is 0.73535698..., code 188
    assert enc[0, 4, 0] == 188


def test_srgb_round_trip_all_codes():
    codes = np.arange(256, dtype=np.uint8).reshape(16, 16)
    assert np.array_equal(imgcore.srgb_encode(imgcore.srgb_decode(codes))[:, :, 0], codes)


# ---------------------------------------------------------------------------
# Resampling
# ---------------------------------------------------------------------------

def test_resize_constant_preserved():
    img = np.full((6, 10, 3), 0.7, dtype=np.float32)
    for h, w in [(3, 5), (12, 20), (6, 10), (4, 17)]:
        out = imgcore.resize(img, Resampler(h, w))
        assert out.shape == (h, w, 3)
        assert np.allclose(out, 0.7, atol=1e-6)


def test_area_average_2x2_to_1x1():
    img = np.array([[0.0, 1.0], [0.0, 1.0]], dtype=np.float32)[:, :, None]
    out = imgcore.resize(img, Resampler(1, 1))
    assert out[0, 0, 0] == pytest.approx(0.5)


def test_area_downscale_preserves_mean():
    rng = np.random.default_rng(3)
    img = rng.uniform(0, 1, (8, 8, 3)).astype(np.float32)
    out = imgcore.resize(img, Resampler(4, 4))
    assert abs(float(out.mean()) - float(img.mean())) < 1e-6
    # also on a non-divisible shrink
    out2 = imgcore.resize(img, Resampler(3, 5))
    assert abs(float(out2.mean()) - float(img.mean())) < 1e-6


def test_resize_is_linear():
    rng = np.random.default_rng(4)
    x = rng.uniform(0, 1, (7, 9, 3)).astype(np.float32)
    y = rng.uniform(0, 1, (7, 9, 3)).astype(np.float32)
    r = Resampler(13, 5)
    lhs = imgcore.resize(2.5 * x + 0.5 * y, r)
    rhs = 2.5 * imgcore.resize(x, r) + 0.5 * imgcore.resize(y, r)
    assert np.abs(lhs - rhs).max() < 1e-6


def test_bilinear_upscale_preserves_bounds():
    rng = np.random.default_rng(5)
    img = rng.uniform(0.2, 0.8, (6, 6, 1)).astype(np.float32)
    out = imgcore.resize(img, Resampler(17, 23))
    assert out.min() >= img.min() - 1e-6
    assert out.max() <= img.max() + 1e-6


def test_resize_rejects_zero_target():
    img = np.zeros((4, 4, 1), dtype=np.float32)
    with pytest.raises(ValueError):
        imgcore.resize(img, Resampler(0, 4))


# ---------------------------------------------------------------------------
# PFM
# ---------------------------------------------------------------------------

def test_pfm_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(6)
    img = rng.normal(size=(7, 5, 3)).astype(np.float32)
    path = tmp_path / "x.pfm"
    imgcore.write_pfm(img, path)
    back = imgcore.read_pfm(path)
    assert back.dtype == np.float32
    assert np.array_equal(back, img)
    # gray flavor
    gray = rng.normal(size=(4, 9, 1)).astype(np.float32)
    imgcore.write_pfm(gray, path)
    assert np.array_equal(imgcore.read_pfm(path), gray)


def test_pfm_header_convention(tmp_path):
    # "PF\n5 7\n-1.0\n": 5 wide, 7 high, little-endian, bottom-to-top rows
    payload = np.arange(5 * 7 * 3, dtype="<f4")
    path = tmp_path / "hand.pfm"
    path.write_bytes(b"PF\n5 7\n-1.0\n" + payload.tobytes())
    img = imgcore.read_pfm(path)
    assert img.shape == (7, 5, 3)
    # first pixel of the file is the bottom-left of the image
    assert img[6, 0, 0] == 0.0
    assert img[0, 0, 0] == float(5 * 6 * 3)


def test_pfm_payload_size_mismatch(tmp_path):
    path = tmp_path / "bad.pfm"
    one_channel_payload = np.zeros(5 * 7, dtype="<f4").tobytes()
    path.write_bytes(b"PF\n5 7\n-1.0\n" + one_channel_payload)
    with pytest.raises(ValueError, match="size mismatch"):
        imgcore.read_pfm(path)


def test_pfm_malformed_header(tmp_path):
    path = tmp_path / "bad.pfm"
    path.write_bytes(b"P6\n5 7\n-1.0\n")
    with pytest.raises(ValueError, match="magic"):
        imgcore.read_pfm(path)
    path.write_bytes(b"PF\nfive 7\n-1.0\n")
    with pytest.raises(ValueError, match="header"):
        imgcore.read_pfm(path)


def test_pfm_nan_reports_pixel_index(tmp_path):
    img = np.zeros((3, 3, 3), dtype=np.float32)
    img[1, 2, 0] = np.nan
    with pytest.raises(ValueError, match="index 5"):
        imgcore.write_pfm(img, tmp_path / "nan.pfm")

    ok = np.zeros((2, 2, 1), dtype=np.float32)
    path = tmp_path / "nan2.pfm"
    imgcore.write_pfm(ok, path)
    raw = bytearray(path.read_bytes())
    raw[-4:] = np.array([np.nan], dtype="<f4").tobytes()
    path.write_bytes(bytes(raw))
    with pytest.raises(ValueError, match="NaN"):
        imgcore.read_pfm(path)


def test_big_endian_pfm(tmp_path):
    img = np.array([[[1.5, -2.0, 3.25]]], dtype=np.float32)
    path = tmp_path / "be.pfm"
    path.write_bytes(b"PF\n1 1\n1.0\n" + img[::-1].astype(">f4").tobytes())
    assert np.array_equal(imgcore.read_pfm(path), img)


# ---------------------------------------------------------------------------
# PNG display path
# ---------------------------------------------------------------------------

def test_png_round_trip(tmp_path):
    rng = np.random.default_rng(8)
    img8 = rng.integers(0, 256, (9, 11, 3), dtype=np.uint8)
    path = tmp_path / "x.png"
    imgcore.write_png(img8, path)
    assert np.array_equal(imgcore.read_png(path), img8)
    gray = rng.integers(0, 256, (5, 4, 1), dtype=np.uint8)
    imgcore.write_png(gray, path)
    assert np.array_equal(imgcore.read_png(path), gray)


def test_png_bytes_deterministic():
    rng = np.random.default_rng(9)
    img8 = rng.integers(0, 256, (6, 6, 3), dtype=np.uint8)
    assert imgcore.png_bytes(img8) == imgcore.png_bytes(img8.copy())


def test_as_image_validation():
    with pytest.raises(ValueError):
        imgcore.as_image(np.zeros((4, 4, 2)))
    with pytest.raises(ValueError):
        imgcore.as_image(np.full((4, 4, 3), np.inf))
    assert imgcore.as_image(np.zeros((4, 4))).shape == (4, 4, 1)
