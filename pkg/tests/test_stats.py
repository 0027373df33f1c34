import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import mannwhitneyu, rankdata

from fabric_mpc.stats import mann_whitney_u


def enumerate_p(x, y):
    """Exact two-sided p by listing every way to split the pooled ranks."""
    ranks = rankdata(np.concatenate([x, y]))
    n, m = len(x), len(y)
    mean = n * m / 2
    u = ranks[:n].sum() - n * (n + 1) / 2
    hits = total = 0
    for idx in itertools.combinations(range(n + m), n):
        uu = ranks[list(idx)].sum() - n * (n + 1) / 2
        hits += abs(uu - mean) >= abs(u - mean) - 1e-9
        total += 1
    return u, hits / total


def test_examples():
    assert mann_whitney_u([1, 2], [3, 4]) == (0.0, pytest.approx(1 / 3))
    u, p = mann_whitney_u([3, 1, 2], [2, 3, 1])
    assert p >= 0.99
    with pytest.raises(ValueError):
        mann_whitney_u([], [1])


def test_matches_enumeration_for_all_small_sizes():
    rng = np.random.default_rng(0)
    for n in range(1, 12):
        for m in range(1, 13 - n):
            for _ in range(3):
                # coarse values so ties are common
                x = rng.integers(0, 6, n).astype(float)
                y = rng.integers(0, 6, m).astype(float)
                u, p = mann_whitney_u(x, y)
                eu, ep = enumerate_p(x, y)
                assert u == eu
                assert p == pytest.approx(ep, abs=1e-12)


@given(st.lists(st.floats(0, 100), min_size=1, max_size=10), st.lists(st.floats(0, 100), min_size=1, max_size=10))
def test_exact_matches_scipy_without_ties(x, y):
    if len(set(x + y)) < len(x + y):
        return
    u, p = mann_whitney_u(x, y)
    ref = mannwhitneyu(x, y, alternative="two-sided", method="exact")
    assert u == ref.statistic
    assert p == pytest.approx(ref.pvalue, rel=1e-9)


def test_normal_approximation_matches_scipy():
    rng = np.random.default_rng(1)
    x = np.round(rng.normal(80, 10, 40))
    y = np.round(rng.normal(85, 10, 35))
    u, p = mann_whitney_u(x, y)
    ref = mannwhitneyu(x, y, alternative="two-sided", method="asymptotic", use_continuity=True)
    assert u == ref.statistic
    assert p == pytest.approx(ref.pvalue, rel=1e-9)


def test_symmetry():
    x, y = [1.0, 5.0, 7.0, 9.0], [2.0, 3.0, 4.0]
    u1, p1 = mann_whitney_u(x, y)
    u2, p2 = mann_whitney_u(y, x)
    assert u1 + u2 == len(x) * len(y)
    assert p1 == pytest.approx(p2)
    assert not math.isnan(p1)
