import gzip
import struct

import numpy as np
import pytest

from golden_sgd.data import (
    Dataset, desk_splits, find_idx_pair, load_idx, normalize_to_pm1, read_idx,
    stratified_split, subsample, synthetic_digits, write_idx, write_idx_pair,
    IMAGE_MAGIC, LABEL_MAGIC,
)
from golden_sgd.errors import ConsistencyError, DegenerateSplitError, DomainError, FormatError, TruncationError


def _hand_fixture(tmp_path):
    """Two 2x3 images written byte by byte."""
    pixels = bytes([0, 1, 2, 3, 4, 5, 250, 251, 252, 253, 254, 255])
    img = tmp_path / "img.idx"
    img.write_bytes(struct.pack(">IIII", 0x803, 2, 2, 3) + pixels)
    lab = tmp_path / "lab.idx"
    lab.write_bytes(struct.pack(">II", 0x801, 2) + bytes([7, 1]))
    return img, lab


def test_hand_built_idx(tmp_path):
    ds = load_idx(*_hand_fixture(tmp_path))
    assert ds.images.shape == (2, 2, 3)
    assert ds.images[1].tolist() == [[250, 251, 252], [253, 254, 255]]
    assert ds.labels.tolist() == [7, 1]


def test_idx_write_read_bit_exact(tmp_path):
    img, _ = _hand_fixture(tmp_path)
    arr = read_idx(img, IMAGE_MAGIC)
    for name in ("copy.idx", "copy.idx.gz"):
        write_idx(tmp_path / name, arr)
        assert read_idx(tmp_path / name, IMAGE_MAGIC).tobytes() == arr.tobytes()
    assert (tmp_path / "copy.idx").read_bytes() == img.read_bytes()
    assert gzip.decompress((tmp_path / "copy.idx.gz").read_bytes()) == img.read_bytes()


def test_wrong_magic(tmp_path):
    bad = tmp_path / "lab.idx"
    bad.write_bytes(struct.pack(">II", 0x803, 1) + b"\x00")
    with pytest.raises(FormatError):
        read_idx(bad, LABEL_MAGIC)


def test_truncated(tmp_path):
    img, _ = _hand_fixture(tmp_path)
    short = tmp_path / "short.idx"
    short.write_bytes(img.read_bytes()[:-1])
    with pytest.raises(TruncationError):
        read_idx(short, IMAGE_MAGIC)
    short.write_bytes(img.read_bytes()[:6])
    with pytest.raises(TruncationError):
        read_idx(short, IMAGE_MAGIC)


def test_count_mismatch(tmp_path):
    img, _ = _hand_fixture(tmp_path)
    lab = tmp_path / "lab3.idx"
    lab.write_bytes(struct.pack(">II", 0x801, 3) + bytes([1, 2, 3]))
    with pytest.raises(ConsistencyError):
        load_idx(img, lab)


def test_find_pair(tmp_path):
    ds = synthetic_digits(20, 0)
    write_idx_pair(ds, tmp_path, "train")
    img, lab = find_idx_pair(tmp_path, "train")
    assert img.name == "train-images-idx3-ubyte.gz"
    back = load_idx(img, lab)
    assert np.array_equal(back.images, ds.images) and np.array_equal(back.labels, ds.labels)
    assert find_idx_pair(tmp_path, "t10k") is None


def test_mnist_sample_shape(mnist_dir):
    if mnist_dir is None:
        pytest.skip("MNIST sample not available")
    ds = load_idx(*find_idx_pair(mnist_dir, "train"))
    assert ds.images.shape == (4000, 28, 28)
    assert np.bincount(ds.labels).tolist() == [400] * 10


def test_synthetic_deterministic_and_balanced():
    a, b = synthetic_digits(100, 7), synthetic_digits(100, 7)
    assert np.array_equal(a.images, b.images) and np.array_equal(a.labels, b.labels)
    assert np.bincount(a.labels).tolist() == [10] * 10
    assert a.provenance == "synthetic" and a.images.shape == (100, 28, 28)
    assert not np.array_equal(a.images, synthetic_digits(100, 8).images)


def test_synthetic_digits_are_learnable():
    # ridge regression on raw pixels onto one-hot targets
    train, test = synthetic_digits(1000, 1), synthetic_digits(300, 2)
    x = normalize_to_pm1(train).reshape(len(train), -1)
    y = np.eye(10)[train.labels]
    w = np.linalg.solve(x.T @ x + 10.0 * np.eye(x.shape[1]), x.T @ y)
    pred = (normalize_to_pm1(test).reshape(len(test), -1) @ w).argmax(axis=1)
    assert (pred == test.labels).mean() > 0.5


def test_normalize():
    x = normalize_to_pm1(np.array([[[0, 255, 127]]], dtype=np.uint8))
    assert x.shape == (1, 1, 1, 3)
    assert x[0, 0, 0, 0] == -1.0 and x[0, 0, 0, 1] == 1.0
    assert x[0, 0, 0, 2] == pytest.approx(127 / 127.5 - 1, abs=1e-9)
    assert x[0, 0, 0, 2] == pytest.approx(-0.00392, abs=1e-5)


def _balanced(n=100):
    return Dataset(np.zeros((n, 2, 2), np.uint8), np.arange(n) % 10)


def test_subsample_identity():
    ds = synthetic_digits(30, 0)
    sub = subsample(ds, 1.0, seed=3)
    assert np.array_equal(sub.images, ds.images) and np.array_equal(sub.labels, ds.labels)


def test_subsample_half():
    sub = subsample(_balanced(), 0.5, seed=0)
    assert len(sub) == 50 and np.bincount(sub.labels).tolist() == [5] * 10


def test_subsample_seeds_vary_sets_not_counts():
    ds = Dataset(np.arange(100, dtype=np.uint8).reshape(100, 1, 1), np.arange(100) % 10)
    sets = set()
    for seed in range(20):
        sub = subsample(ds, 0.5, seed)
        assert np.bincount(sub.labels).tolist() == [5] * 10
        sets.add(sub.images.tobytes())
    assert len(sets) > 1


def test_subsample_errors():
    with pytest.raises(DegenerateSplitError):
        subsample(_balanced(20), 0.25, seed=0)
    with pytest.raises(DomainError):
        subsample(_balanced(), 0.0, seed=0)


def test_stratified_split_disjoint():
    ds = Dataset(np.arange(200, dtype=np.uint8).reshape(200, 1, 1), np.arange(200) % 10)
    parts = stratified_split(ds, {"train": 120, "val": 40, "test": 40}, seed=1)
    seen = [set(p.images.ravel().tolist()) for p in parts.values()]
    assert sum(map(len, seen)) == len(set().union(*seen)) == 200
    assert parts["val"].split == "val"


def test_desk_splits_synthetic(monkeypatch, caplog):
    monkeypatch.delenv("GOLDEN_SGD_DATA", raising=False)
    with caplog.at_level("INFO"):
        s = desk_splits(100, 30, 40, seed=0)
    assert [len(s[k]) for k in ("train", "val", "test")] == [100, 30, 40]
    assert s["train"].provenance == "synthetic"
    assert "synthetic" in caplog.text
    with pytest.raises(FileNotFoundError):
        desk_splits(100, 30, 40, source="idx")


def test_desk_splits_from_idx(mnist_dir, monkeypatch):
    if mnist_dir is None:
        pytest.skip("MNIST sample not available")
    monkeypatch.setenv("GOLDEN_SGD_DATA", mnist_dir)
    s = desk_splits()
    assert [len(s[k]) for k in ("train", "val", "test")] == [2000, 500, 1000]
    assert s["test"].provenance == "idx-file"
    assert np.bincount(s["train"].labels).tolist() == [200] * 10
