"""Top-k aggregation and the Wilcoxon signed-rank test."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InsufficientDataError, UndefinedTestError

EXACT_MAX = 20


@dataclass(frozen=True)
class SampleSummary:
    values: tuple  # the k best values, best first
    order: tuple  # their indices in the input
    mean: float
    std: float  # population standard deviation


def top_k_mean(values, k=10):
    """Mean and population std of the ``k`` largest values.

    Ties keep input order, so the ranking is stable.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size < k:
        raise InsufficientDataError(f"need at least {k} values, got {values.size}")
    order = np.argsort(-values, kind="stable")[:k]
    top = values[order]
    return SampleSummary(tuple(top.tolist()), tuple(order.tolist()), float(top.mean()), float(top.std()))


def _ranks(a):
    """Average ranks (1-based) of ``a`` with ties sharing the mean rank."""
    order = np.argsort(a, kind="stable")
    ranks = np.empty(a.size)
    sorted_a = a[order]
    i = 0
    while i < a.size:
        j = i
        while j + 1 < a.size and sorted_a[j + 1] == sorted_a[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _exact_counts(doubled_ranks):
    """Number of sign patterns giving each doubled positive-rank sum."""
    total = int(sum(doubled_ranks))
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:total + 1 - r]
        counts = counts + shifted
    return counts


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # sum of ranks of positive differences
    pvalue: float
    n_used: int  # differences left after dropping zeros
    method: str  # "exact" or "normal"

    def __iter__(self):
        return iter((self.statistic, self.pvalue))


def wilcoxon_signed_rank(x, y, two_sided=True):
    """Paired Wilcoxon signed-rank test of ``x - y``.

    Zero differences are dropped and tied magnitudes get average ranks.
    For up to 20 non-zero differences the p-value is exact: the null
    distribution of W over all 2**m sign patterns is counted by convolution
    over the (doubled, hence integral) ranks. Beyond that a normal
    approximation with tie correction is used. One-sided tests the
    alternative that ``x`` tends to exceed ``y``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 1:
        raise ValueError("x and y must be equal-length 1-d samples")
    d = x - y
    d = d[d != 0]
    m = d.size
    if m == 0:
        raise UndefinedTestError("all paired differences are zero")
    ranks = _ranks(np.abs(d))
    w = float(ranks[d > 0].sum())

    if m <= EXACT_MAX:
        doubled = [int(round(2 * r)) for r in ranks]
        counts = _exact_counts(doubled)
        w2 = int(round(2 * w))
        n_patterns = 2 ** m
        upper = Fraction(int(counts[w2:].sum()), n_patterns)
        if two_sided:
            lower = Fraction(int(counts[:w2 + 1].sum()), n_patterns)
            p = min(Fraction(1), 2 * min(lower, upper))
        else:
            p = upper
        return WilcoxonResult(w, float(p), m, "exact")

    mean = m * (m + 1) / 4.0
    _, tie_sizes = np.unique(np.abs(d), return_counts=True)
    var = m * (m + 1) * (2 * m + 1) / 24.0 - float(((tie_sizes ** 3) - tie_sizes).sum()) / 48.0
    z = (w - mean) / math.sqrt(var)
    if two_sided:
        p = math.erfc(abs(z) / math.sqrt(2.0))
    else:
        p = 0.5 * math.erfc(z / math.sqrt(2.0))
    return WilcoxonResult(w, min(1.0, p), m, "normal")
