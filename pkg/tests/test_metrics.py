import numpy as np
import pytest

from flashlab import metrics


def test_psnr_identical_hits_cap():
    img = np.random.default_rng(0).uniform(0, 1, (16, 16, 3))
    assert metrics.psnr(img, img.copy()) == 99.0


def test_psnr_known_mse_values():
    x = np.zeros((10, 10))
    y = np.full((10, 10), 0.1)  # MSE 0.01
    assert metrics.psnr(x, y) == pytest.approx(20.0, abs=1e-9)
    z = np.ones((10, 10)) * 1.0  # MSE 1 against zeros
    assert metrics.psnr(x, z) == pytest.approx(0.0, abs=1e-9)


def test_psnr_symmetric_and_monotone_in_noise():
    rng = np.random.default_rng(1)
    img = rng.uniform(0.2, 0.8, (12, 12))
    noise = rng.normal(size=img.shape)
    vals = [metrics.psnr(img, img + amp * noise) for amp in (0.01, 0.02, 0.05, 0.1)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert metrics.psnr(img, img + noise * 0.1) == pytest.approx(metrics.psnr(img + noise * 0.1, img))


def test_psnr_shape_mismatch():
    with pytest.raises(ValueError):
        metrics.psnr(np.zeros((4, 4)), np.zeros((4, 5)))


def test_ssim_identical_is_exactly_one():
    img = np.random.default_rng(2).uniform(0, 1, (16, 16, 3))
    assert metrics.ssim(img, img.copy()) == 1.0


def test_ssim_inverted_pattern_below_one():
    yy, xx = np.meshgrid(np.linspace(0, 1, 16), np.linspace(0, 1, 16), indexing="ij")
    pattern = 0.5 + 0.4 * np.sin(6 * xx) * np.cos(5 * yy)
    assert metrics.ssim(pattern, 1.0 - pattern) < 1.0


def test_ssim_symmetric():
    rng = np.random.default_rng(3)
    a, b = rng.uniform(0, 1, (14, 14)), rng.uniform(0, 1, (14, 14))
    assert metrics.ssim(a, b) == pytest.approx(metrics.ssim(b, a), abs=1e-12)


def test_ssim_matches_windowed_loop_oracle():
    rng = np.random.default_rng(4)
    a = rng.uniform(0, 1, (13, 15))
    b = np.clip(a + rng.normal(0, 0.1, a.shape), 0, 1)

    win = metrics.gaussian_window()
    c1, c2 = (0.01) ** 2, (0.03) ** 2
    vals = []
    for i in range(13 - 10):
        for j in range(15 - 10):
            xa = a[i:i + 11, j:j + 11]
            xb = b[i:i + 11, j:j + 11]
            mx = (win * xa).sum()
            my = (win * xb).sum()
            sxx = (win * xa * xa).sum() - mx * mx
            syy = (win * xb * xb).sum() - my * my
            sxy = (win * xa * xb).sum() - mx * my
            vals.append(((2 * mx * my + c1) * (2 * sxy + c2))
                        / ((mx * mx + my * my + c1) * (sxx + syy + c2)))
    assert metrics.ssim(a, b) == pytest.approx(float(np.mean(vals)), abs=1e-6)


def test_ssim_rejects_small_images():
    with pytest.raises(ValueError, match="window"):
        metrics.ssim(np.zeros((8, 8)), np.zeros((8, 8)))
