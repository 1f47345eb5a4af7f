"""Datasets: IDX files, procedurally drawn digits, normalization and subsampling."""

from __future__ import annotations

import gzip
import logging
import math
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConsistencyError, DegenerateSplitError, DomainError, FormatError, TruncationError
from .micrograd.tensor import Rng

log = logging.getLogger(__name__)

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
SPLITS = ("train", "val", "test")
DATA_ENV = "GOLDEN_SGD_DATA"


@dataclass(frozen=True, eq=False)
class Dataset:
    images: np.ndarray  # (N, H, W) or (N, H, W, 3), uint8
    labels: np.ndarray  # (N,), int64
    split: str = "train"
    provenance: str = "idx-file"

    def __post_init__(self):
        if self.images.shape[0] != self.labels.shape[0]:
            raise ConsistencyError(
                f"{self.images.shape[0]} images but {self.labels.shape[0]} labels")
        if self.images.dtype != np.uint8:
            raise DomainError("images must be 8-bit intensities")
        if self.split not in SPLITS:
            raise DomainError(f"split must be one of {SPLITS}, got {self.split!r}")
        if self.provenance not in ("idx-file", "synthetic"):
            raise DomainError(f"unknown provenance {self.provenance!r}")

    def __len__(self):
        return self.labels.shape[0]

    def take(self, indices, split=None):
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.images[indices], self.labels[indices],
                       split or self.split, self.provenance)

    def with_images(self, images):
        return Dataset(images, self.labels, self.split, self.provenance)


# -- IDX ---------------------------------------------------------------------

def _open(path):
    path = Path(path)
    return gzip.open(path, "rb") if path.suffix == ".gz" else open(path, "rb")


def read_idx(path, magic):
    """Read an unsigned-byte IDX file whose big-endian magic must equal ``magic``."""
    with _open(path) as fh:
        raw = fh.read()
    if len(raw) < 4:
        raise TruncationError(f"{path}: shorter than the magic number")
    (found,) = struct.unpack(">I", raw[:4])
    if found != magic:
        raise FormatError(f"{path}: magic 0x{found:08x}, expected 0x{magic:08x}")
    ndim = found & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise TruncationError(f"{path}: header truncated")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    count = math.prod(dims)
    if len(raw) - header < count:
        raise TruncationError(f"{path}: expected {count} data bytes, found {len(raw) - header}")
    return np.frombuffer(raw, dtype=np.uint8, count=count, offset=header).reshape(dims).copy()


def write_idx(path, array):
    """Write a uint8 array as IDX (gzip-compressed when ``path`` ends in .gz)."""
    array = np.ascontiguousarray(array, dtype=np.uint8)
    header = struct.pack(">I", 0x00000800 | array.ndim) + struct.pack(f">{array.ndim}I", *array.shape)
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "wb") as fh:
        fh.write(header)
        fh.write(array.tobytes())


def load_idx(image_path, label_path, split="train"):
    images = read_idx(image_path, IMAGE_MAGIC)
    labels = read_idx(label_path, LABEL_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise ConsistencyError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    return Dataset(images, labels.astype(np.int64), split, "idx-file")


def find_idx_pair(directory, prefix):
    """Locate ``<prefix>-images-idx3-ubyte[.gz]`` and its label file."""
    directory = Path(directory)
    for suffix in ("", ".gz"):
        img = directory / f"{prefix}-images-idx3-ubyte{suffix}"
        lab = directory / f"{prefix}-labels-idx1-ubyte{suffix}"
        if img.exists() and lab.exists():
            return img, lab
    return None


# -- synthetic digits ----------------------------------------------------------

def _arc(cx, cy, rx, ry, start, stop, n=10):
    t = np.radians(np.linspace(start, stop, n))
    return [(cx + rx * np.cos(a), cy - ry * np.sin(a)) for a in t]


# strokes per digit in a unit box, y pointing down
_GLYPHS = {
    0: [_arc(0.5, 0.5, 0.28, 0.4, 0, 360, 16)],
    1: [[(0.38, 0.25), (0.55, 0.1), (0.55, 0.9)]],
    2: [_arc(0.5, 0.32, 0.26, 0.22, 160, -20, 8) + [(0.24, 0.9), (0.78, 0.9)]],
    3: [_arc(0.48, 0.3, 0.24, 0.2, 150, -90, 9), _arc(0.48, 0.7, 0.26, 0.2, 90, -150, 9)],
    4: [[(0.62, 0.1), (0.22, 0.62), (0.8, 0.62)], [(0.62, 0.3), (0.62, 0.9)]],
    5: [[(0.74, 0.1), (0.3, 0.1), (0.28, 0.46)] + _arc(0.48, 0.66, 0.26, 0.24, 120, -150, 10)],
    6: [[(0.7, 0.12), (0.32, 0.5)] + _arc(0.5, 0.68, 0.22, 0.22, 160, -200, 14)],
    7: [[(0.22, 0.1), (0.78, 0.1), (0.4, 0.9)]],
    8: [_arc(0.5, 0.3, 0.2, 0.2, 0, 360, 12), _arc(0.5, 0.7, 0.25, 0.2, 0, 360, 12)],
    9: [_arc(0.5, 0.32, 0.22, 0.22, 0, 360, 12), [(0.72, 0.32), (0.64, 0.9)]],
}


def _segments(strokes):
    segs = []
    for stroke in strokes:
        pts = np.asarray(stroke, dtype=np.float64)
        segs.append(np.stack([pts[:-1], pts[1:]], axis=1))
    return np.concatenate(segs)  # (S, 2, 2)


def _render(digit, rng, size=28):
    segs = _segments(_GLYPHS[digit])
    # random affine: scale, rotation, shear, translation (pixel units)
    scale = rng.uniform(0.75, 0.95) * size
    rot = math.radians(rng.uniform(-12, 12))
    shear = rng.uniform(-0.25, 0.25)
    a = np.array([[math.cos(rot), -math.sin(rot)], [math.sin(rot), math.cos(rot)]]) @ \
        np.array([[1.0, shear], [0.0, 1.0]]) * scale
    shift = size / 2 + rng.uniform(-2.0, 2.0, size=2)
    pts = (segs - 0.5) @ a.T + shift
    pts = pts + rng.normal(0.0, 0.35, size=pts.shape)

    yy, xx = np.mgrid[0:size, 0:size]
    p = np.stack([xx.ravel() + 0.5, yy.ravel() + 0.5], axis=1)[:, None, :]
    s0, s1 = pts[None, :, 0, :], pts[None, :, 1, :]
    d = s1 - s0
    t = np.clip(((p - s0) * d).sum(-1) / np.maximum((d * d).sum(-1), 1e-12), 0.0, 1.0)
    dist = np.linalg.norm(p - (s0 + t[..., None] * d), axis=-1).min(axis=1)
    width = rng.uniform(1.0, 1.9)
    ink = np.clip(width + 0.5 - dist, 0.0, 1.0)
    ink = np.clip(ink * rng.uniform(0.8, 1.0) + rng.normal(0.0, 0.03, size=ink.shape), 0.0, 1.0)
    return np.round(ink * 255).astype(np.uint8).reshape(size, size)


def synthetic_digits(n, seed, split="train"):
    """``n`` jittered stroke-drawn 28x28 digits with balanced classes."""
    if n < 10:
        raise DomainError("need at least one image per class (n >= 10)")
    rng = Rng(seed)
    labels = rng.child(0).permutation(np.arange(n) % 10).astype(np.int64)
    draw = rng.child(1)
    images = np.stack([_render(int(d), draw) for d in labels])
    return Dataset(images, labels, split, "synthetic")


# -- transforms / splitting -------------------------------------------------------

def normalize_to_pm1(data):
    """Map 8-bit intensities to [-1, 1] as a float64 NCHW batch."""
    images = data.images if isinstance(data, Dataset) else np.asarray(data)
    x = images.astype(np.float64) / 127.5 - 1.0
    if x.ndim == 4:  # (N, H, W, 3) colour
        return np.ascontiguousarray(x.transpose(0, 3, 1, 2))
    if x.ndim == 3:
        return x[:, None, :, :]
    return x


def _class_counts(labels, n_total):
    """Split ``n_total`` over classes proportionally (largest remainder)."""
    classes, counts = np.unique(labels, return_counts=True)
    exact = counts * n_total / counts.sum()
    alloc = np.floor(exact).astype(np.int64)
    short = n_total - alloc.sum()
    order = np.lexsort((classes, -(exact - alloc)))
    alloc[order[:short]] += 1
    return dict(zip(classes.tolist(), alloc.tolist()))


def _pick(labels, per_class, rng, exclude=None):
    chosen = []
    for cls, k in per_class.items():
        idx = np.flatnonzero(labels == cls)
        if exclude is not None:
            idx = idx[~np.isin(idx, exclude)]
        if k > idx.size:
            raise DegenerateSplitError(f"class {cls} has {idx.size} items, {k} requested")
        chosen.append(idx[rng.permutation(idx.size)[:k]])
    return np.sort(np.concatenate(chosen)) if chosen else np.empty(0, dtype=np.int64)


def subsample(dataset, fraction, seed):
    """Stratified sample keeping ``floor(fraction * count)`` items of each class.

    ``seed`` is an int or an ``Rng`` stream.
    """
    if not 0.0 < fraction <= 1.0:
        raise DomainError(f"fraction must lie in (0, 1], got {fraction}")
    if fraction == 1.0:
        return dataset.take(np.arange(len(dataset)))
    classes, counts = np.unique(dataset.labels, return_counts=True)
    per_class = {c: math.floor(fraction * n) for c, n in zip(classes.tolist(), counts.tolist())}
    empty = [c for c, k in per_class.items() if k == 0]
    if empty:
        raise DegenerateSplitError(f"fraction {fraction} leaves classes {empty} empty")
    rng = seed if isinstance(seed, Rng) else Rng(seed)
    return dataset.take(_pick(dataset.labels, per_class, rng))


def stratified_split(dataset, sizes, seed, key=0):
    """Disjoint stratified draws, e.g. ``{"train": 2000, "val": 500}``."""
    rng = Rng(seed).child(key)
    used = np.empty(0, dtype=np.int64)
    out = {}
    for i, (split, n) in enumerate(sizes.items()):
        idx = _pick(dataset.labels, _class_counts(dataset.labels, n), rng.child(i), exclude=used)
        used = np.concatenate([used, idx])
        out[split] = dataset.take(idx, split=split)
    return out


def desk_splits(n_train=2000, n_val=500, n_test=1000, seed=0, data_dir=None, source="auto"):
    """Train/val/test datasets for desk-scale experiments.

    ``source`` is ``"idx"``, ``"synthetic"`` or ``"auto"``; ``auto`` uses IDX
    files from ``data_dir`` or ``$GOLDEN_SGD_DATA`` when present and falls back
    to synthetic digits otherwise. Train and val come from the ``train`` IDX
    pair, test from ``t10k`` when that pair exists.
    """
    data_dir = data_dir or os.environ.get(DATA_ENV)
    if source not in ("auto", "idx", "synthetic"):
        raise DomainError(f"unknown data source {source!r}")
    train_pair = find_idx_pair(data_dir, "train") if data_dir and source != "synthetic" else None
    if train_pair is None:
        if source == "idx":
            raise FileNotFoundError(f"no IDX training files in {data_dir!r}")
        if source == "auto":
            log.info("no IDX data found (set %s); using synthetic digits", DATA_ENV)
        pool = synthetic_digits(n_train + n_val + n_test, seed)
        return stratified_split(pool, {"train": n_train, "val": n_val, "test": n_test}, seed)

    pool = load_idx(*train_pair)
    test_pair = find_idx_pair(data_dir, "t10k")
    if test_pair is None:
        return stratified_split(pool, {"train": n_train, "val": n_val, "test": n_test}, seed)
    out = stratified_split(pool, {"train": n_train, "val": n_val}, seed)
    test_pool = load_idx(*test_pair, split="test")
    out.update(stratified_split(test_pool, {"test": n_test}, seed, key=1))
    return out


def write_idx_pair(dataset, directory, prefix, gz=True):
    """Write ``<prefix>-images-idx3-ubyte`` and the matching label file."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    suffix = ".gz" if gz else ""
    img = directory / f"{prefix}-images-idx3-ubyte{suffix}"
    lab = directory / f"{prefix}-labels-idx1-ubyte{suffix}"
    write_idx(img, dataset.images)
    write_idx(lab, dataset.labels)
    return img, lab
