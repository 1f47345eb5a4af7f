"""Independent reference implementations used by several test modules."""

import itertools
from fractions import Fraction

import numpy as np


def direct_conv(x, w, b, padding=1):
    """Six nested loops, no vectorisation."""
    n, c, h, wd = x.shape
    f, _, kh, kw = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    ho, wo = h + 2 * padding - kh + 1, wd + 2 * padding - kw + 1
    out = np.zeros((n, f, ho, wo))
    for a in range(n):
        for o in range(f):
            for i in range(ho):
                for j in range(wo):
                    s = b[o]
                    for ch in range(c):
                        for p in range(kh):
                            for q in range(kw):
                                s += xp[a, ch, i + p, j + q] * w[o, ch, p, q]
                    out[a, o, i, j] = s
    return out


def enumeration_pvalue(x, y):
    """Two-sided signed-rank p by listing every sign pattern of the non-zero differences."""
    d = np.asarray(x, float) - np.asarray(y, float)
    d = d[d != 0]
    a = np.abs(d)
    ranks = [Fraction(int(np.sum(a < v))) + Fraction(int(np.sum(a == v)) + 1, 2) for v in a]
    w = sum((r for r, v in zip(ranks, d) if v > 0), Fraction(0))
    lo = hi = 0
    for signs in itertools.product((0, 1), repeat=len(d)):
        s = sum((r for r, keep in zip(ranks, signs) if keep), Fraction(0))
        lo += s <= w
        hi += s >= w
    total = 2 ** len(d)
    return float(min(Fraction(1), 2 * min(Fraction(lo, total), Fraction(hi, total))))
