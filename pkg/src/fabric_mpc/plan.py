"""Receding-horizon planning with exact simulator rollouts.

Candidate action sequences live in optimizer space ``[-1, 1]^(4H)``.  For
each step, the first two coordinates map affinely onto the unit plane and
the last two onto ``[-max_pull, max_pull]``; the pull is then truncated at
the plane edge exactly as the executor does.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Literal

import numpy as np

from . import _kernels as K
from .action import OLD_BOUNDS, ActionBounds, ExecConfig, PickPull, clip_action, execute
from .cloth import ClothParams, ClothState, init_flat
from .cost import (
    Calibration,
    Goal,
    GoalKind,
    Thresholds,
    VertexMode,
    calibrate_threshold,
    classify_success,
    pixel_l2,
    vertex_l2,
)
from .observe import CANONICAL, OOB_MARGIN, coverage, out_of_bounds, render, render_points
from .optimize import CemConfig, CmaEsConfig, OptTrace, cem_minimize, cmaes_minimize

CostKind = Literal["pixel_l2", "vertex_l2"]
Termination = Literal["success", "out_of_bounds", "max_actions"]

SMOOTH_VAR = (0.25, 0.25, 0.04, 0.04)
FOLD_VAR = (0.25, 0.25, 0.08, 0.08)


@dataclass(frozen=True)
class PlannerConfig:
    horizon: int = 5
    optimizer: Literal["cem", "cmaes"] = "cem"
    cem: CemConfig = field(default_factory=CemConfig)
    cmaes: CmaEsConfig = field(default_factory=CmaEsConfig)
    cost: CostKind = "pixel_l2"
    vertex_mode: VertexMode = "sum_sq"
    bounds: ActionBounds = OLD_BOUNDS
    # probability that a first-iteration sample picks a current corner
    corner_bias: float = 0.0
    max_actions: int = 15
    coverage_success: float = 92.0
    thresholds: Thresholds | None = None
    exec_cfg: ExecConfig = field(default_factory=ExecConfig)
    oob_penalty: float = 1e6
    jobs: int = 1

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.max_actions < 1:
            raise ValueError("max_actions must be >= 1")
        if not 0 <= self.corner_bias <= 1:
            raise ValueError("corner_bias must be in [0, 1]")
        if self.optimizer not in ("cem", "cmaes"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.cost not in ("pixel_l2", "vertex_l2"):
            raise ValueError(f"unknown cost {self.cost!r}")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    @property
    def dim(self) -> int:
        return 4 * self.horizon


# ---------------------------------------------------------------------------
# goals


# extra distance the goal drags a corner past its target; the flap is
# stretched while pinned and relaxes back by about this much on release
GOAL_OVERSHOOT = 0.05
GOAL_ARC_HEIGHT = 0.3
GOAL_DRAG_STEPS = 100


def _drag(state: ClothState, index: int, target, overshoot: float = 0.0) -> ClothState:
    """Pinned teleport-drag of one vertex along an arc to ``target``.

    The vertex is held on the plane until the cloth settles, then released.
    """
    out = state.copy()
    phys = out.params.as_array()
    tol = ExecConfig().settle_tol
    p, q = out.points, out.prev_points
    a = p[index].copy()
    b = np.array([target[0], target[1], 0.0])
    d = b[:2] - a[:2]
    if np.linalg.norm(d) > 0:
        b[:2] += overshoot * d / np.linalg.norm(d)
    out.pinned[index] = True
    for t in np.linspace(0.0, 1.0, GOAL_DRAG_STEPS + 1)[1:]:
        pt = a + (b - a) * t
        pt[2] = GOAL_ARC_HEIGHT * math.sin(math.pi * t)
        p[index] = pt
        q[index] = pt
        K.step(p, q, out.pinned, phys)
    K.settle(p, q, out.pinned, phys, tol, 600)
    out.pinned[index] = False
    K.settle(p, q, out.pinned, phys, tol, 600)
    return out


def make_goal(kind: GoalKind, params: ClothParams | None = None) -> Goal:
    """smooth: the flat cloth.  fold1: the (1, 1) corner dragged across the
    diagonal onto (0, 0).  fold2: the (1, 1) then the (0, 0) corner dragged
    to the centre."""
    s = init_flat(params)
    last = s.points.shape[0] - 1
    if kind == "smooth":
        pass
    elif kind == "fold1":
        s = _drag(s, last, (0.0, 0.0), GOAL_OVERSHOOT)
    elif kind == "fold2":
        s = _drag(s, last, (0.5, 0.5), GOAL_OVERSHOOT)
        s = _drag(s, 0, (0.5, 0.5), GOAL_OVERSHOOT)
    else:
        raise ValueError(f"unknown goal kind {kind!r}")
    return Goal.from_state(s, kind)


# ---------------------------------------------------------------------------
# sequence evaluation


def to_actions(u: np.ndarray, bounds: ActionBounds) -> np.ndarray:
    """Map optimizer coordinates (..., 4H) to clipped actions (..., H, 4)."""
    u = np.clip(np.asarray(u, dtype=np.float64), -1.0, 1.0)
    a = u.reshape(u.shape[:-1] + (-1, 4)).copy()
    a[..., :2] = (a[..., :2] + 1.0) / 2.0
    a[..., 2:] *= bounds.max_pull
    # same truncation as the executor, so stored actions are what runs
    end = a[..., :2] + a[..., 2:]
    out = (end < 0.0) | (end > 1.0)
    a[..., 2:] = np.where(out, np.clip(end, 0.0, 1.0) - a[..., :2], a[..., 2:])
    return a


def from_actions(actions: np.ndarray, bounds: ActionBounds) -> np.ndarray:
    a = np.asarray(actions, dtype=np.float64).copy()
    a[..., :2] = 2.0 * a[..., :2] - 1.0
    a[..., 2:] /= bounds.max_pull
    return a.reshape(a.shape[:-2] + (-1,))


def _as_array(actions) -> np.ndarray:
    if len(actions) and isinstance(actions[0], PickPull):
        return np.array([a.as_array() for a in actions])
    return np.asarray(actions, dtype=np.float64).reshape(-1, 4)


def _costs(finals: np.ndarray, done: np.ndarray, oob: np.ndarray, horizon: int, goal: Goal, n: int,
           cost: CostKind, mode: VertexMode, penalty: float) -> np.ndarray:
    out = np.empty(len(finals))
    for k, pts in enumerate(finals):
        if cost == "pixel_l2":
            out[k] = pixel_l2(render_points(pts, n, CANONICAL), goal.obs)
        else:
            out[k] = vertex_l2(pts, goal.mesh.points, mode)
        if oob[k]:
            out[k] += penalty + (horizon - done[k])
    return out


def _rollout_costs(state: ClothState, actions: np.ndarray, goal: Goal, cost: CostKind, mode: VertexMode,
                   cfg: ExecConfig, penalty: float) -> np.ndarray:
    finals, done, oob = K.rollout_batch(state.points, state.prev_points, state.pinned, state.params.as_array(),
                                        np.ascontiguousarray(actions), cfg.as_array(), OOB_MARGIN)
    return _costs(finals, done, oob, actions.shape[1], goal, state.n, cost, mode, penalty)


def evaluate_batch(state: ClothState, actions: np.ndarray, goal: Goal, cfg: PlannerConfig,
                   pool: ProcessPoolExecutor | None = None) -> np.ndarray:
    """Costs of N candidate sequences, shape (N, H, 4), from ``state``."""
    args = (goal, cfg.cost, cfg.vertex_mode, cfg.exec_cfg, cfg.oob_penalty)
    if pool is None or len(actions) < 2:
        return _rollout_costs(state, actions, *args)
    chunks = np.array_split(actions, min(cfg.jobs, len(actions)))
    futures = [pool.submit(_rollout_costs, state, c, *args) for c in chunks]
    return np.concatenate([f.result() for f in futures])


def evaluate_sequence(state: ClothState, actions, goal: Goal, cost_kind: CostKind = "pixel_l2",
                      cfg: PlannerConfig | None = None) -> float:
    """Cost of executing ``actions`` from a copy of ``state``.

    Leaving the plane mid-rollout adds ``oob_penalty`` plus the number of
    steps that were not executed.
    """
    cfg = replace(cfg or PlannerConfig(), cost=cost_kind)
    a = _as_array(actions)
    return float(evaluate_batch(state, a[None], goal, cfg)[0])


# ---------------------------------------------------------------------------
# planning


def default_cem(kind: GoalKind, horizon: int, base: CemConfig | None = None) -> CemConfig:
    base = base or CemConfig()
    var = SMOOTH_VAR if kind == "smooth" else FOLD_VAR
    return replace(
        base,
        init_mean=base.init_mean if base.init_mean is not None else (0.0,) * (4 * horizon),
        init_var=base.init_var if base.init_var is not None else var * horizon,
        lower=-1.0,
        upper=1.0,
    )


def _corner_mixture(state: ClothState, cfg: PlannerConfig, rng: np.random.Generator):
    """Replace picks in the first population with current corner positions."""
    corners = 2.0 * np.clip(state.points[state.corner_indices(), :2], 0, 1) - 1.0

    def hook(xs: np.ndarray) -> np.ndarray:
        xs = xs.copy()
        h = cfg.horizon
        mask = rng.random((len(xs), h)) < cfg.corner_bias
        which = rng.integers(4, size=(len(xs), h))
        picks = xs.reshape(len(xs), h, 4)
        picks[mask, :2] = corners[which[mask]]
        return xs

    return hook


def _first_population_hook(evaluate, hook):
    state = {"first": True}

    def wrapped(xs):
        if state["first"]:
            state["first"] = False
            xs[:] = hook(xs)
        return evaluate(xs)

    return wrapped


def plan_sequence(state: ClothState, goal: Goal, cfg: PlannerConfig, rng: np.random.Generator,
                  pool: ProcessPoolExecutor | None = None) -> tuple[np.ndarray, float, OptTrace]:
    """Optimize an H-step sequence; returns (actions (H, 4), cost, trace)."""

    def evaluate(xs: np.ndarray) -> np.ndarray:
        return evaluate_batch(state, to_actions(xs, cfg.bounds), goal, cfg, pool)

    if cfg.corner_bias > 0:
        evaluate = _first_population_hook(evaluate, _corner_mixture(state, cfg, rng))
    if cfg.optimizer == "cem":
        ocfg = default_cem(goal.kind, cfg.horizon, cfg.cem)
        x, f, trace = cem_minimize(None, cfg.dim, ocfg, rng, batch=evaluate)
    else:
        ocfg = replace(cfg.cmaes, lower=-1.0, upper=1.0)
        x, f, trace = cmaes_minimize(None, cfg.dim, ocfg, rng, batch=evaluate)
    return to_actions(x, cfg.bounds), f, trace


def plan_step(state: ClothState, goal: Goal, cfg: PlannerConfig, rng: np.random.Generator,
              pool: ProcessPoolExecutor | None = None) -> PickPull:
    """First action of the best sequence found from ``state``."""
    seq, _, _ = plan_sequence(state, goal, cfg, rng, pool)
    return clip_action(PickPull.from_array(seq[0]), cfg.bounds)


# ---------------------------------------------------------------------------
# episodes


@dataclass
class EpisodeResult:
    actions: list[PickPull]
    coverage: list[float]
    meshes: list[np.ndarray]
    final_cost: float
    termination: Termination
    success: bool

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def final_coverage(self) -> float:
        return self.coverage[-1]

    @property
    def max_coverage(self) -> float:
        return max(self.coverage)


def goal_cost(state: ClothState, goal: Goal, cfg: PlannerConfig) -> float:
    if cfg.cost == "pixel_l2":
        return pixel_l2(render(state, CANONICAL), goal.obs)
    return vertex_l2(state, goal.mesh, cfg.vertex_mode)


def reached(state: ClothState, goal: Goal, cfg: PlannerConfig) -> bool:
    if goal.kind == "smooth":
        return coverage(state) >= cfg.coverage_success
    return classify_success(state, goal, cfg.thresholds or fold_thresholds(goal.kind))


def run_episode(start: ClothState, goal: Goal, cfg: PlannerConfig, rng: np.random.Generator,
                policy=None) -> EpisodeResult:
    """Plan and execute until success, out of bounds, or ``max_actions``.

    ``policy(state) -> PickPull`` replaces the planner when given, so the
    scripted baselines share the same episode protocol.
    """
    state = start.copy()
    actions: list[PickPull] = []
    covs = [coverage(state)]
    meshes = [state.points.copy()]
    pool = ProcessPoolExecutor(cfg.jobs) if cfg.jobs > 1 and policy is None else None
    termination: Termination = "max_actions"
    try:
        if reached(state, goal, cfg):
            termination = "success"
        else:
            while len(actions) < cfg.max_actions:
                a = policy(state) if policy is not None else plan_step(state, goal, cfg, rng, pool)
                a = clip_action(a, cfg.bounds)
                state = execute(state, a, cfg.exec_cfg).state
                actions.append(a)
                covs.append(coverage(state))
                meshes.append(state.points.copy())
                if reached(state, goal, cfg):
                    termination = "success"
                    break
                if out_of_bounds(state):
                    termination = "out_of_bounds"
                    break
    finally:
        if pool is not None:
            pool.shutdown()
    return EpisodeResult(actions, covs, meshes, goal_cost(state, goal, cfg), termination, termination == "success")


# ---------------------------------------------------------------------------
# fold-success thresholds


def _pull_corner(state: ClothState, index: int, target, steps: int, bounds: ActionBounds, cfg: ExecConfig,
                 rng: np.random.Generator, jitter: float = 0.02) -> ClothState:
    """Bounded pick-pulls of one vertex toward a jittered ``target``."""
    goal = np.asarray(target, dtype=np.float64) + rng.uniform(-jitter, jitter, size=2)
    for _ in range(steps):
        x, y = state.points[index, :2]
        dx, dy = goal - (x, y)
        state = execute(state, clip_action(PickPull(float(x), float(y), float(dx), float(dy)), bounds), cfg).state
    return state


FOLD_TARGETS = {
    # (vertex selector, target) per fold, in order
    "fold1": (("last", (0.0, 0.0)),),
    "fold2": (("last", (0.5, 0.5)), ("first", (0.5, 0.5))),
}


def _vertex(state: ClothState, which: str) -> int:
    n = state.n
    return {"first": 0, "last": n * n - 1, "right": n - 1, "top": n * (n - 1)}[which]


def scripted_folds(kind: GoalKind, count: int, rng: np.random.Generator, bounds: ActionBounds = ActionBounds(0.6),
                   cfg: ExecConfig | None = None) -> list[ClothState]:
    """Folds a bounded planner can reach: each corner pulled to its target in
    two or three jittered pick-pulls."""
    cfg = cfg or ExecConfig()
    out = []
    for _ in range(count):
        s = init_flat()
        for which, target in FOLD_TARGETS[kind]:
            s = _pull_corner(s, _vertex(s, which), target, int(rng.integers(2, 4)), bounds, cfg, rng)
        out.append(s)
    return out


def scripted_nonfolds(kind: GoalKind, count: int, rng: np.random.Generator, bounds: ActionBounds = ActionBounds(0.6),
                      cfg: ExecConfig | None = None) -> list[ClothState]:
    """Near misses, cycling through: a fold stopped at 30-60% of the way,
    the same fold along the other diagonal, an incomplete fold sequence (or a
    corner pulled outward), and a crumple with no fold."""
    cfg = cfg or ExecConfig()
    out = []
    folds = FOLD_TARGETS[kind]
    mirrored = {"last": "right", "first": "top"}
    for k in range(count):
        s = init_flat()
        variant = k % 4
        if variant == 0:
            f = rng.uniform(0.3, 0.6)
            for which, target in folds:
                i = _vertex(s, which)
                start = s.points[i, :2]
                s = _pull_corner(s, i, start + f * (np.asarray(target) - start), 2, bounds, cfg, rng)
        elif variant == 1:
            for which, target in folds:
                t = np.asarray(target)
                s = _pull_corner(s, _vertex(s, mirrored[which]), (t[1], 1 - t[0]), 3, bounds, cfg, rng)
        elif variant == 2:
            if len(folds) > 1:
                which, target = folds[int(rng.integers(len(folds)))]
                s = _pull_corner(s, _vertex(s, which), target, 3, bounds, cfg, rng)
            else:
                # corner dragged along an edge instead of across the diagonal
                s = _pull_corner(s, _vertex(s, "last"), (1.0, rng.uniform(0.0, 0.3)), 2, bounds, cfg, rng)
        else:
            x, y = rng.uniform(0.3, 0.7, size=2)
            a = PickPull(float(x), float(y), *map(float, rng.uniform(-0.3, 0.3, size=2)))
            s = execute(s, clip_action(a, bounds), cfg, lift_scale=6.0).state
        out.append(s)
    return out


@dataclass(frozen=True)
class FoldCalibration:
    kind: str
    pixel: Calibration
    vertex: Calibration
    costs: dict = field(repr=False, default_factory=dict)

    @property
    def thresholds(self) -> Thresholds:
        return Thresholds(self.pixel.threshold, self.vertex.threshold)


def calibrate_fold(kind: GoalKind, seed: int = 0, count: int = 20, goal: Goal | None = None) -> FoldCalibration:
    """Thresholds halfway between scripted-fold and near-miss cost clusters."""
    goal = goal or make_goal(kind)
    rng = np.random.default_rng(seed)
    groups = {"fold": scripted_folds(kind, count, rng), "nonfold": scripted_nonfolds(kind, count, rng)}
    costs = {}
    for name, states in groups.items():
        costs[f"{name}_pixel"] = [pixel_l2(render(s, CANONICAL), goal.obs) for s in states]
        costs[f"{name}_vertex"] = [vertex_l2(s, goal.mesh) for s in states]
    return FoldCalibration(
        kind,
        calibrate_threshold(costs["fold_pixel"], costs["nonfold_pixel"]),
        calibrate_threshold(costs["fold_vertex"], costs["nonfold_vertex"]),
        costs,
    )


@lru_cache(maxsize=4)
def fold_thresholds(kind: GoalKind) -> Thresholds:
    """Default success thresholds for a fold goal (seed-0 calibration)."""
    return calibrate_fold(kind).thresholds
