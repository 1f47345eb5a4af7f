"""Test-time noise: pixel-intensity flips and HSI intensity inversion.

Both procedures pick ``floor(percent/100 * pixel_count)`` distinct pixels
uniformly without replacement. The pick is the prefix of one seeded
permutation, so for a fixed seed a higher percentage always contains the
pixels flipped at a lower one.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .data import write_idx
from .errors import DomainError
from .micrograd.tensor import Rng

MODES = ("pixel-flip", "hsi-intensity")
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class NoiseSpec:
    mode: str = "pixel-flip"
    percent: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise DomainError(f"noise mode must be one of {MODES}, got {self.mode!r}")
        if not 0.0 <= self.percent <= 100.0:
            raise DomainError(f"percent must lie in [0, 100], got {self.percent}")


def flip_count(percent, n_pixels):
    if not 0.0 <= percent <= 100.0:
        raise DomainError(f"percent must lie in [0, 100], got {percent}")
    return math.floor(percent * n_pixels / 100.0)


def select_pixels(n_pixels, percent, seed):
    """Flat indices of the pixels to perturb."""
    k = flip_count(percent, n_pixels)
    rng = seed if isinstance(seed, Rng) else Rng(seed)
    return rng.permutation(n_pixels)[:k]


def flip_noise(image, percent, seed):
    """Replace the selected pixels of a grayscale image by ``255 - value``."""
    image = np.asarray(image, dtype=np.uint8)
    out = image.copy()
    flat = out.reshape(-1)
    idx = select_pixels(flat.size, percent, seed)
    flat[idx] = 255 - flat[idx]
    return out


# -- HSI -----------------------------------------------------------------------

def rgb_to_hsi(rgb):
    """RGB in [0, 255] -> (h, s, i) with h in [0, 2pi), s and i in [0, 1].

    Accepts a single pixel or an array whose last axis is RGB. Hue is 0 where
    saturation is 0.
    """
    rgb = np.asarray(rgb, dtype=np.float64) / 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    i = (r + g + b) / 3.0
    lo = np.minimum(np.minimum(r, g), b)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(i > 0, 1.0 - lo / i, 0.0)
        num = 0.5 * ((r - g) + (r - b))
        den = np.sqrt((r - g) ** 2 + (r - b) * (g - b))
        theta = np.arccos(np.clip(num / den, -1.0, 1.0))
    h = np.where(b > g, TWO_PI - theta, theta)
    h = np.where(den > 0, h, 0.0)
    h = np.where(h >= TWO_PI, 0.0, h)
    s = np.where(den > 0, s, 0.0)
    if np.ndim(h) == 0:
        return float(h), float(s), float(i)
    return h, s, i


def _sector(i, s, h):
    major = i * (1.0 + s * np.cos(h) / np.cos(math.pi / 3.0 - h))
    minor = i * (1.0 - s)
    return major, minor, 3.0 * i - (major + minor)


def hsi_to_rgb(h, s, i):
    """Inverse of ``rgb_to_hsi``; returns float RGB in [0, 255] (clipped)."""
    h = np.mod(np.asarray(h, dtype=np.float64), TWO_PI)
    s = np.asarray(s, dtype=np.float64)
    i = np.asarray(i, dtype=np.float64)
    h, s, i = np.broadcast_arrays(h, s, i)
    r = np.empty(h.shape)
    g = np.empty(h.shape)
    b = np.empty(h.shape)

    rg = h < TWO_PI / 3
    gb = (h >= TWO_PI / 3) & (h < 2 * TWO_PI / 3)
    br = h >= 2 * TWO_PI / 3

    hi, lo, mid = _sector(i[rg], s[rg], h[rg])
    r[rg], b[rg], g[rg] = hi, lo, mid
    hi, lo, mid = _sector(i[gb], s[gb], h[gb] - TWO_PI / 3)
    g[gb], r[gb], b[gb] = hi, lo, mid
    hi, lo, mid = _sector(i[br], s[br], h[br] - 2 * TWO_PI / 3)
    b[br], g[br], r[br] = hi, lo, mid

    out = np.clip(np.stack([r, g, b], axis=-1) * 255.0, 0.0, 255.0)
    return out if out.ndim > 1 else tuple(float(v) for v in out)


def hsi_intensity_noise(image, percent, seed):
    """Invert HSI intensity (i -> 1 - i) on the selected pixels of an RGB image.

    Unselected pixels are returned bit-identical; hue and saturation of the
    selected ones are kept wherever the new intensity stays in gamut.
    """
    image = np.asarray(image, dtype=np.uint8)
    if image.shape[-1] != 3:
        raise DomainError(f"expected an (H, W, 3) RGB image, got {image.shape}")
    out = image.copy()
    flat = out.reshape(-1, 3)
    idx = select_pixels(flat.shape[0], percent, seed)
    if idx.size:
        h, s, i = rgb_to_hsi(flat[idx])
        flat[idx] = np.round(hsi_to_rgb(h, s, 1.0 - i)).astype(np.uint8)
    return out


# -- dataset level -----------------------------------------------------------------

def apply_noise(dataset, spec):
    """Noise every test image independently; image ``k`` uses stream ``(seed, k)``."""
    if dataset.split != "test":
        raise DomainError(f"noise is applied to the test split only, got {dataset.split!r}")
    if spec.percent == 0:
        return dataset
    fn = flip_noise if spec.mode == "pixel-flip" else hsi_intensity_noise
    root = Rng(spec.seed)
    images = np.stack([fn(img, spec.percent, root.child(k)) for k, img in enumerate(dataset.images)])
    return dataset.with_images(images)


def write_noise_fixture(out_dir, dataset, spec):
    """Emit the noised test images (IDX) with a JSON manifest for audit."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    noisy = apply_noise(dataset, spec)
    stem = f"{spec.mode}-{spec.percent:g}"
    write_idx(out_dir / f"{stem}-images.idx", noisy.images)
    manifest = asdict(spec)
    manifest.update({
        "procedure": "pixel-flip-255-minus" if spec.mode == "pixel-flip" else "hsi-intensity-inversion",
        "selection": "per-image-independent",
        "n_images": len(noisy),
        "images": f"{stem}-images.idx",
    })
    (out_dir / f"{stem}.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return noisy
