import json
import math

import numpy as np
import pytest

from golden_sgd.data import Dataset, read_idx, IMAGE_MAGIC
from golden_sgd.errors import DomainError
from golden_sgd.micrograd import Rng
from golden_sgd.noise import (
    NoiseSpec, apply_noise, flip_count, flip_noise, hsi_intensity_noise, hsi_to_rgb,
    rgb_to_hsi, select_pixels, write_noise_fixture,
)


def _img(seed=0, shape=(28, 28)):
    return np.random.default_rng(seed).integers(0, 256, size=shape, dtype=np.uint8)


def test_flip_zero_percent_is_identity():
    img = _img()
    assert np.array_equal(flip_noise(img, 0, seed=1), img)


def test_flip_single_pixel():
    assert flip_noise(np.zeros((1, 1), np.uint8), 100, seed=0)[0, 0] == 255


@pytest.mark.parametrize("percent", [5, 10, 33.3, 100])
def test_flip_changes_exact_count(percent):
    img = np.full((28, 28), 100, np.uint8)  # 255 - 100 != 100, so every flip is visible
    out = flip_noise(img, percent, seed=2)
    assert int((out != img).sum()) == math.floor(percent * 784 / 100) == flip_count(percent, 784)
    assert np.all(out[out != img] == 155)


def test_flip_is_involution():
    img = _img(1)
    assert np.array_equal(flip_noise(flip_noise(img, 37, seed=4), 37, seed=4), img)


def test_selection_nested_and_distinct():
    small, large = select_pixels(784, 5, 9), select_pixels(784, 10, 9)
    assert len(set(large.tolist())) == len(large) == 78
    assert set(small.tolist()) <= set(large.tolist())


def test_flip_count_domain():
    with pytest.raises(DomainError):
        flip_count(101, 10)
    with pytest.raises(DomainError):
        NoiseSpec("salt", 5)


def test_hsi_reference_values():
    assert rgb_to_hsi((80, 80, 80)) == (0.0, 0.0, pytest.approx(80 / 255))
    h, s, i = rgb_to_hsi((255, 0, 0))
    assert (h, s) == (0.0, 1.0) and i == pytest.approx(1 / 3)
    h, _, _ = rgb_to_hsi((0, 255, 0))
    assert h == pytest.approx(2 * math.pi / 3)
    h, _, _ = rgb_to_hsi((0, 0, 255))
    assert h == pytest.approx(4 * math.pi / 3)


def test_hsi_round_trip_1000_pixels():
    px = np.random.default_rng(3).integers(0, 256, size=(1000, 3))
    back = np.round(hsi_to_rgb(*rgb_to_hsi(px)))
    assert np.max(np.abs(back - px)) <= 1


def test_hsi_scalar_round_trip():
    r, g, b = hsi_to_rgb(*rgb_to_hsi((12, 200, 90)))
    assert (round(r), round(g), round(b)) == (12, 200, 90)


def test_hsi_noise_zero_percent():
    img = np.random.default_rng(4).integers(0, 256, size=(8, 8, 3), dtype=np.uint8)
    out = hsi_intensity_noise(img, 0, seed=0)
    assert np.max(np.abs(out.astype(int) - img)) <= 1


def test_hsi_noise_gray():
    img = np.full((1, 1, 3), 100, np.uint8)
    assert hsi_intensity_noise(img, 100, seed=0)[0, 0].tolist() == [155, 155, 155]


def test_hsi_noise_keeps_hue():
    h, s, i = rgb_to_hsi((100, 80, 80))
    rgb = hsi_to_rgb(h, s, 1 - i)
    assert max(rgb) < 255  # stays in gamut
    h2, s2, i2 = rgb_to_hsi(rgb)
    assert abs(h2 - h) < 1e-6 and s2 == pytest.approx(s) and i2 == pytest.approx(1 - i)


def test_hsi_noise_only_touches_selected():
    img = np.random.default_rng(5).integers(0, 256, size=(10, 10, 3), dtype=np.uint8)
    out = hsi_intensity_noise(img, 20, seed=6)
    chosen = set(select_pixels(100, 20, 6).tolist())
    same = np.all(out.reshape(-1, 3) == img.reshape(-1, 3), axis=1)
    assert all(same[k] for k in range(100) if k not in chosen)


def _test_split(n=6):
    return Dataset(np.stack([_img(k) for k in range(n)]), np.arange(n), "test")


def test_apply_noise_per_image_streams():
    ds = _test_split()
    out = apply_noise(ds, NoiseSpec("pixel-flip", 10, seed=3))
    for k in range(len(ds)):
        assert np.array_equal(out.images[k], flip_noise(ds.images[k], 10, Rng(3).child(k)))
    assert apply_noise(ds, NoiseSpec("pixel-flip", 0, 3)) is ds


def test_apply_noise_rejects_training_data():
    ds = Dataset(np.zeros((2, 4, 4), np.uint8), np.zeros(2, np.int64), "train")
    with pytest.raises(DomainError):
        apply_noise(ds, NoiseSpec("pixel-flip", 5))


def test_noise_fixture(tmp_path):
    ds = _test_split()
    noisy = write_noise_fixture(tmp_path, ds, NoiseSpec("pixel-flip", 5, 1))
    manifest = json.loads((tmp_path / "pixel-flip-5.json").read_text())
    assert manifest["procedure"] == "pixel-flip-255-minus" and manifest["n_images"] == 6
    assert np.array_equal(read_idx(tmp_path / manifest["images"], IMAGE_MAGIC), noisy.images)
