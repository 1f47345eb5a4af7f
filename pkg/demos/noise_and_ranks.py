"""The two test-time noise procedures and the paired signed-rank test."""

import numpy as np

from golden_sgd.data import synthetic_digits
from golden_sgd.noise import flip_noise, hsi_intensity_noise, rgb_to_hsi
from golden_sgd.stats import top_k_mean, wilcoxon_signed_rank

digit = synthetic_digits(10, seed=0).images[0]
for percent in (0, 5, 10):
    noisy = flip_noise(digit, percent, seed=1)
    print(f"{percent:>3}% flip: {int((noisy != digit).sum())} of {digit.size} pixels changed")

swatch = np.array([[[100, 100, 100], [100, 80, 80]]], dtype=np.uint8)
out = hsi_intensity_noise(swatch, 100, seed=0)
for before, after in zip(swatch[0], out[0]):
    h0, s0, i0 = rgb_to_hsi(before)
    h1, s1, i1 = rgb_to_hsi(after)
    print(f"{before} -> {after}   intensity {i0:.3f} -> {i1:.3f}, hue {h0:.3f} -> {h1:.3f}")

rng = np.random.default_rng(0)
proposed = 0.97 + rng.normal(0, 0.003, 5)
other = 0.96 + rng.normal(0, 0.003, 5)
res = wilcoxon_signed_rank(proposed, other)
print(f"signed-rank W={res.statistic:g} p={res.pvalue:.4f} ({res.method}, n={res.n_used})")
print("top-3 mean of", np.round(proposed, 4), "=", round(top_k_mean(proposed, 3).mean, 4))
