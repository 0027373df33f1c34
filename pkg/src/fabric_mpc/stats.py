"""Two-sample rank test for comparing benchmark runs."""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import rankdata

EXACT_MAX_N = 20


def _u_statistic(x: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    ranks = rankdata(np.concatenate([x, y]))
    n = len(x)
    return float(ranks[:n].sum() - n * (n + 1) / 2), ranks


def _exact_p(u: float, ranks: np.ndarray, n: int) -> float:
    """Two-sided p by counting every split of the pooled midranks."""
    m = len(ranks) - n
    # midranks are multiples of 1/2, so doubled ranks are integers
    r2 = np.rint(2 * ranks).astype(np.int64)
    total = int(r2.sum())
    # ways[k, s]: subsets of size k whose doubled rank sum is s
    ways = np.zeros((n + 1, total + 1), dtype=np.int64)
    ways[0, 0] = 1
    for r in r2:
        ways[1:, r:] = ways[1:, r:] + ways[:-1, : total + 1 - r]
    counts = ways[n]
    sums = np.arange(total + 1)
    us = sums / 2 - n * (n + 1) / 2
    mean = n * m / 2
    extreme = np.abs(us - mean) >= abs(u - mean) - 1e-9
    return float(counts[extreme].sum() / counts.sum())


def _normal_p(u: float, ranks: np.ndarray, n: int) -> float:
    m = len(ranks) - n
    big = n + m
    _, t = np.unique(ranks, return_counts=True)
    tie = float(np.sum(t**3 - t)) / (big * (big - 1))
    var = n * m / 12 * ((big + 1) - tie)
    if var <= 0:
        return 1.0
    z = (abs(u - n * m / 2) - 0.5) / math.sqrt(var)
    return float(min(1.0, math.erfc(max(z, 0.0) / math.sqrt(2))))


def mann_whitney_u(x, y) -> tuple[float, float]:
    """U statistic of ``x`` and its two-sided p-value.

    Ties get midranks.  Samples with ``len(x) + len(y) <= 20`` use the exact
    permutation distribution of the observed ranks; larger ones use the
    normal approximation with tie and continuity corrections.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size == 0 or y.size == 0:
        raise ValueError("both samples must be non-empty")
    u, ranks = _u_statistic(x, y)
    if x.size + y.size <= EXACT_MAX_N:
        return u, _exact_p(u, ranks, x.size)
    return u, _normal_p(u, ranks, x.size)
