"""Shared test utilities: random cloth states and brute-force oracles."""

import numpy as np

from fabric_mpc.action import OLD_BOUNDS, execute, sample_action
from fabric_mpc.policy import tier_start

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: list[str] = []


def random_state(seed: int):
    """A tier start, optionally followed by one or two random actions."""
    rng = np.random.default_rng(seed)
    s = tier_start(seed % 4, rng)
    for _ in range(seed % 3):
        s = execute(s, sample_action(OLD_BOUNDS, 0.0, s, rng)).state
    return s


def contact_pairs(points: np.ndarray, n: int, radius: float) -> set:
    """All non-adjacent point pairs closer than ``radius``, by brute force."""
    d = np.linalg.norm(points[:, None] - points[None], axis=-1)
    idx = np.arange(len(points))
    r, c = idx // n, idx % n
    adjacent = (np.abs(r[:, None] - r[None]) <= 1) & (np.abs(c[:, None] - c[None]) <= 1)
    i, j = np.nonzero(np.triu((d < radius) & ~adjacent, 1))
    return set(zip(i.tolist(), j.tolist()))


def min_separation(state) -> float:
    """Closest non-adjacent pair distance as a multiple of the contact radius."""
    radius = state.params.self_collision_radius
    pairs = contact_pairs(state.points, state.n, radius)
    if not pairs:
        return np.inf
    i, j = np.array(sorted(pairs)).T
    return float(np.linalg.norm(state.points[i] - state.points[j], axis=1).min() / radius)


def vertex_l2_loop(a, b, mode="sum_sq") -> float:
    total = 0.0
    for p, q in zip(a, b):
        sq = sum((float(u) - float(v)) ** 2 for u, v in zip(p, q))
        total += sq if mode == "sum_sq" else sq**0.5
    return total
