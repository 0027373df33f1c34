import numpy as np
import pytest
from dataclasses import replace

from fabric_mpc.action import NEW_BOUNDS, OLD_BOUNDS, ActionBounds, PickPull, execute
from fabric_mpc.cost import classify_success, vertex_l2
from fabric_mpc.observe import CANONICAL, coverage, render
from fabric_mpc.optimize import CemConfig, CmaEsConfig
from fabric_mpc.plan import (
    FoldCalibration,
    PlannerConfig,
    calibrate_fold,
    default_cem,
    evaluate_batch,
    evaluate_sequence,
    fold_thresholds,
    from_actions,
    make_goal,
    plan_sequence,
    plan_step,
    run_episode,
    scripted_folds,
    to_actions,
)

SMALL = PlannerConfig(horizon=2, cem=CemConfig(population=60, iterations=3))


@pytest.fixture(scope="module")
def goals():
    return {k: make_goal(k) for k in ("smooth", "fold1", "fold2")}


def test_planner_config_validation():
    with pytest.raises(ValueError):
        PlannerConfig(horizon=0)
    with pytest.raises(ValueError):
        PlannerConfig(optimizer="adam")
    with pytest.raises(ValueError):
        PlannerConfig(corner_bias=2.0)
    assert PlannerConfig().dim == 20


def test_goal_examples(goals):
    assert coverage(goals["smooth"].mesh) == pytest.approx(100, abs=0.5)
    assert coverage(goals["fold1"].mesh) == pytest.approx(50, abs=5)
    depth = goals["fold2"].obs[..., 3]
    centre = depth[21:35, 21:35]
    # single layer on the plane renders at the offset level
    assert centre.max() > CANONICAL.depth_offset + 20


def test_fold1_shows_underside(goals):
    obs = goals["fold1"].obs[7:-7, 7:-7]
    bottom = np.all(obs[..., :3] == CANONICAL.fabric_rgb_bottom, axis=-1)
    assert bottom.mean() > 0.2


def test_action_mapping_round_trip():
    rng = np.random.default_rng(0)
    u = rng.uniform(-1, 1, (5, 8))
    a = to_actions(u, OLD_BOUNDS)
    assert a.shape == (5, 2, 4)
    assert np.all((a[..., :2] >= 0) & (a[..., :2] <= 1))
    assert np.all(np.abs(a[..., 2:]) <= 0.4 + 1e-12)
    end = a[..., :2] + a[..., 2:]
    assert np.all((end >= -1e-12) & (end <= 1 + 1e-12))
    inside = np.all((u[..., 0::4] + 1) / 2 + 0.4 * u[..., 2::4] <= 1, axis=-1)
    back = from_actions(to_actions(np.zeros((1, 8)), OLD_BOUNDS), OLD_BOUNDS)
    assert np.allclose(back, 0)
    assert inside.shape == (5,)


def test_default_cem_variances():
    assert default_cem("smooth", 2).init_var == (0.25, 0.25, 0.04, 0.04) * 2
    assert default_cem("fold1", 1).init_var == (0.25, 0.25, 0.08, 0.08)


def test_evaluate_sequence_zero_actions_from_goal(goals):
    g = goals["fold1"]
    # picks on bare plane grasp nothing
    zero = [PickPull(1.0, 1.0, 0.0, 0.0)] * 5
    assert evaluate_sequence(g.mesh, zero, g) == 0.0
    assert evaluate_sequence(g.mesh, zero, g, "vertex_l2") == 0.0


def test_evaluate_sequence_is_pure_and_matches_sequential(tier_states, goals):
    s = tier_states[2][0]
    before = s.points.copy()
    acts = [PickPull(0.4, 0.4, 0.2, 0.1), PickPull(0.6, 0.5, -0.1, 0.3)]
    c = evaluate_sequence(s, acts, goals["smooth"])
    assert np.array_equal(s.points, before)
    seq = s
    for a in acts:
        seq = execute(seq, a).state
    from fabric_mpc.cost import pixel_l2
    assert c == pixel_l2(render(seq), goals["smooth"].obs)


def test_scripted_fold_sequence_below_threshold(goals):
    g = goals["fold1"]
    flat = make_goal("smooth").mesh
    # two bounded pulls of the far corner onto (0, 0)
    acts = []
    s = flat
    for _ in range(2):
        x, y = s.points[-1, :2]
        a = PickPull(float(x), float(y), float(np.clip(-x, -0.6, 0.6)), float(np.clip(-y, -0.6, 0.6)))
        acts.append(a)
        s = execute(s, a).state
    padded = acts + [PickPull(1.0, 1.0, 0.0, 0.0)] * 3
    cost = evaluate_sequence(flat, padded, g)
    assert cost < fold_thresholds("fold1").pixel


def test_oob_penalty(flat, goals):
    cfg = PlannerConfig(horizon=1)
    a = np.array([[[0.5, 0.5, 0.0, 0.0]]])
    # fling the cloth well off the plane by pre-shifting it to the edge
    s = flat.copy()
    s.points[:, 0] += 0.9
    s.prev_points[:] = s.points
    c = evaluate_batch(s, a, goals["smooth"], cfg)
    assert c[0] >= cfg.oob_penalty


def test_plan_step_deterministic(tier_states, goals):
    s = tier_states[1][0]
    a = plan_step(s, goals["smooth"], SMALL, np.random.default_rng(3))
    b = plan_step(s, goals["smooth"], SMALL, np.random.default_rng(3))
    assert a == b
    assert abs(a.dx) <= 0.4 and abs(a.dy) <= 0.4 and 0 <= a.x + a.dx <= 1


@pytest.mark.slow
def test_plan_step_at_goal_is_near_zero(goals):
    g = goals["fold1"]
    cfg = replace(SMALL, cem=CemConfig(population=100, iterations=3))
    ok = 0
    for seed in range(10):
        a = plan_step(g.mesh, g, cfg, np.random.default_rng(seed))
        grasped = execute(g.mesh, a).grasped
        ok += np.hypot(a.dx, a.dy) <= 0.05 or not grasped
    assert ok >= 8


@pytest.mark.slow
def test_plan_step_does_not_lose_coverage_on_tier3(goals):
    cfg = replace(SMALL, cem=CemConfig(population=100, iterations=3))
    drops = []
    for seed in range(10):
        from fabric_mpc.policy import tier_start
        s = tier_start(3, np.random.default_rng(seed))
        a = plan_step(s, goals["smooth"], cfg, np.random.default_rng(seed))
        drops.append(coverage(s) - coverage(execute(s, a).state))
    assert max(drops) <= 5


def test_vertex_plan_not_worse_than_zero_sequence(goals, tier_states):
    s = tier_states[1][1]
    g = goals["smooth"].__class__.from_state(s, "smooth")
    cfg = replace(SMALL, cost="vertex_l2")
    _, f, _ = plan_sequence(s, g, cfg, np.random.default_rng(0))
    zero = evaluate_batch(s, to_actions(np.zeros((1, cfg.dim)), cfg.bounds), g, cfg)[0]
    assert f <= zero


def test_run_episode_start_is_goal(flat, goals):
    r = run_episode(flat, goals["smooth"], SMALL, np.random.default_rng(0))
    assert r.success and r.termination == "success" and r.n_actions == 0
    assert r.coverage == [pytest.approx(100, abs=0.5)]


def test_run_episode_with_policy_respects_limits(tier_states, goals):
    from fabric_mpc.policy import corner_pull_policy
    cfg = replace(SMALL, max_actions=3)
    r = run_episode(tier_states[3][0], goals["smooth"], cfg, np.random.default_rng(0),
                    policy=lambda s: corner_pull_policy(s, cfg.bounds))
    assert r.n_actions <= 3
    assert len(r.coverage) == len(r.meshes) == r.n_actions + 1
    assert r.termination in ("success", "max_actions", "out_of_bounds")


def test_run_episode_independent_of_jobs(tier_states, goals):
    cfg = replace(SMALL, max_actions=2, cem=CemConfig(population=40, iterations=2))
    a = run_episode(tier_states[2][1], goals["smooth"], cfg, np.random.default_rng(9))
    b = run_episode(tier_states[2][1], goals["smooth"], replace(cfg, jobs=2), np.random.default_rng(9))
    assert a.actions == b.actions and a.coverage == b.coverage


def test_cmaes_planner_runs(tier_states, goals):
    cfg = replace(SMALL, optimizer="cmaes", cmaes=CmaEsConfig(iterations=3, population=8), cost="vertex_l2")
    a = plan_step(tier_states[1][0], goals["fold1"], cfg, np.random.default_rng(0))
    assert 0 <= a.x <= 1


def test_corner_bias_puts_first_picks_on_corners(flat, goals):
    seen = []
    from fabric_mpc import plan as P
    orig = P.evaluate_batch

    def spy(state, actions, goal, cfg, pool=None):
        seen.append(actions.copy())
        return orig(state, actions, goal, cfg, pool)

    P.evaluate_batch = spy
    try:
        cfg = replace(SMALL, corner_bias=1.0, bounds=NEW_BOUNDS, cem=CemConfig(population=20, iterations=1))
        plan_sequence(flat, goals["fold1"], cfg, np.random.default_rng(0))
    finally:
        P.evaluate_batch = orig
    picks = seen[0][..., :2].reshape(-1, 2)
    corners = np.array([[0, 0], [1, 0], [0, 1], [1, 1]])
    assert np.all(np.min(np.abs(picks[:, None] - corners[None]).sum(-1), axis=1) < 1e-12)


def test_calibration_separates(goals):
    cal = calibrate_fold("fold1", count=8, goal=goals["fold1"])
    assert isinstance(cal, FoldCalibration)
    assert cal.pixel.separable
    assert all(classify_success(s, goals["fold1"], cal.thresholds)
               for s in scripted_folds("fold1", 3, np.random.default_rng(1)))
    assert not classify_success(make_goal("smooth").mesh, goals["fold1"], fold_thresholds("fold1"))
