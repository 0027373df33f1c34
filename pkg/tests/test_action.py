import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fabric_mpc.action import (
    NEW_BOUNDS,
    OLD_BOUNDS,
    ActionBounds,
    DegenerateFabricError,
    ExecConfig,
    PickPull,
    clip_action,
    clip_to_plane,
    corner_projections,
    execute,
    grasp_candidates,
    sample_action,
    sample_action_flagged,
)
from fabric_mpc.cost import vertex_l2
from fabric_mpc.observe import coverage, out_of_bounds

from .helpers import random_state

unit = st.floats(0.0, 1.0)
delta = st.floats(-1.0, 1.0)


def test_bounds_validation():
    with pytest.raises(ValueError):
        ActionBounds(0.0)
    with pytest.raises(ValueError):
        ActionBounds(1.5)
    with pytest.raises(ValueError):
        ExecConfig(lift_height=0.0)


def test_clip_example():
    # pick (0.9, 0.9), raw (0.5, 0.5), bounds 0.6
    a = clip_action(PickPull(0.9, 0.9, 0.5, 0.5), NEW_BOUNDS)
    assert (a.dx, a.dy) == pytest.approx((0.1, 0.1))


@given(x=unit, y=unit, dx=delta, dy=delta)
def test_clip_only_shrinks_and_lands_on_plane(x, y, dx, dy):
    cx, cy = clip_to_plane(x, y, dx, dy)
    assert 0.0 <= x + cx <= 1.0 + 1e-12
    assert 0.0 <= y + cy <= 1.0 + 1e-12
    assert abs(cx) <= abs(dx) and abs(cy) <= abs(dy)
    assert cx * dx >= 0 and cy * dy >= 0


@given(seed=st.integers(0, 10_000), bias=st.floats(0.0, 1.0))
def test_sampled_actions_are_in_bounds(seed, bias):
    rng = np.random.default_rng(seed)
    s = random_state(seed % 8)
    a = sample_action(OLD_BOUNDS, bias, s, rng)
    assert 0 <= a.x <= 1 and 0 <= a.y <= 1
    assert abs(a.dx) <= 0.4 and abs(a.dy) <= 0.4
    assert 0 <= a.x + a.dx <= 1 and 0 <= a.y + a.dy <= 1


def test_full_corner_bias_picks_corners(flat):
    rng = np.random.default_rng(0)
    corners = corner_projections(flat)
    for _ in range(50):
        a = sample_action(NEW_BOUNDS, 1.0, flat, rng)
        assert np.min(np.abs(corners - [a.x, a.y]).sum(axis=1)) == 0


def test_corner_fraction(flat):
    rng = np.random.default_rng(1)
    hits = sum(sample_action_flagged(NEW_BOUNDS, 0.3, flat, rng)[1] for _ in range(10_000))
    assert abs(hits / 10_000 - 0.3) <= 0.02


def test_uniform_picks_stay_in_bounding_box(tier_states):
    s = tier_states[3][0]
    lo, hi = s.points[:, :2].min(0), s.points[:, :2].max(0)
    rng = np.random.default_rng(2)
    for _ in range(200):
        a = sample_action(OLD_BOUNDS, 0.0, s, rng)
        assert np.all([a.x, a.y] >= np.clip(lo, 0, 1)) and np.all([a.x, a.y] <= np.clip(hi, 0, 1))


def test_degenerate_box_raises(flat):
    s = flat.copy()
    s.points[:, 0] = 0.5
    with pytest.raises(DegenerateFabricError):
        sample_action(OLD_BOUNDS, 0.0, s, np.random.default_rng(0))
    with pytest.raises(ValueError):
        sample_action(OLD_BOUNDS, 1.5, flat, np.random.default_rng(0))


def test_center_pick_grasps(flat):
    r = execute(flat, PickPull(0.5, 0.5, 0.0, 0.0))
    assert r.grasped and r.pinned_count >= 1


def test_pick_off_fabric_is_noop(flat):
    s = flat.copy()
    s.points[:, :2] = 0.5 * s.points[:, :2]
    s.prev_points[:] = s.points
    r = execute(s, PickPull(0.9, 0.9, -0.2, 0.0))
    assert not r.grasped and r.pinned_count == 0
    assert vertex_l2(r.state, s) == 0.0


def test_corner_fold_reduces_coverage(flat):
    r = execute(flat, PickPull(0.0, 0.0, 0.5, 0.5))
    assert r.grasped
    assert coverage(r.state) < 100.0


def test_full_pull_from_corner_stays_in_bounds(flat):
    r = execute(flat, PickPull(0.0, 0.0, 0.6, 0.6))
    assert not out_of_bounds(r.state)


def test_execute_is_deterministic_and_pure(tier_states):
    s = tier_states[2][0]
    before = s.points.copy()
    a = PickPull(0.4, 0.6, 0.2, -0.1)
    r1, r2 = execute(s, a), execute(s, a)
    assert np.array_equal(r1.state.points, r2.state.points)
    assert np.array_equal(s.points, before)
    assert not r1.state.pinned.any()


def test_truncation_flag(flat):
    assert execute(flat, PickPull(0.9, 0.5, 0.3, 0.0)).truncated
    assert not execute(flat, PickPull(0.5, 0.5, 0.3, 0.0)).truncated


@pytest.mark.parametrize("seed", range(6))
def test_top_layer_rule(seed):
    s = random_state(seed)
    cfg = ExecConfig()
    rng = np.random.default_rng(seed)
    for _ in range(20):
        x, y = rng.random(2)
        idx = grasp_candidates(s, x, y, cfg)
        if len(idx) == 0:
            continue
        near = np.hypot(s.points[:, 0] - x, s.points[:, 1] - y) <= cfg.grasp_radius
        top = s.points[near, 2].max()
        assert np.all(s.points[idx, 2] >= top - cfg.top_layer_band - 1e-12)
        assert np.all(near[idx])
