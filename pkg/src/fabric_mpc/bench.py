"""Smoothing and folding benchmarks: episode runs, summaries, comparisons."""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Literal

import numpy as np

from .action import ActionBounds
from .cost import GoalKind
from .plan import EpisodeResult, PlannerConfig, make_goal, run_episode
from .policy import TierParams, corner_pull_policy, highest_policy, random_policy, tier_start, wrinkle_policy
from .stats import mann_whitney_u

PolicyName = Literal["mpc", "corner", "highest", "wrinkle", "random"]
POLICIES = ("mpc", "corner", "highest", "wrinkle", "random")


@dataclass(frozen=True)
class Summary:
    episodes: int
    final_coverage: float
    final_coverage_std: float
    max_coverage: float
    max_coverage_std: float
    actions: float
    actions_std: float
    success_rate: float


def _mean_std(v) -> tuple[float, float]:
    a = np.asarray(v, dtype=np.float64)
    return float(a.mean()), float(a.std(ddof=1)) if a.size > 1 else 0.0


def summarize(results) -> Summary:
    """Mean and sample standard deviation over episodes.

    Accepts ``EpisodeResult`` objects or per-episode result dicts.
    """
    rows = [r if isinstance(r, dict) else episode_row(r) for r in results]
    if not rows:
        raise ValueError("no episodes to summarize")
    fc = _mean_std([r["final_coverage"] for r in rows])
    mc = _mean_std([r["max_coverage"] for r in rows])
    na = _mean_std([r["actions"] for r in rows])
    sr = float(np.mean([r["termination"] == "success" for r in rows]))
    return Summary(len(rows), *fc, *mc, *na, sr)


def episode_row(r: EpisodeResult, seed: int | None = None, tier: int | None = None) -> dict:
    return {
        "seed": seed,
        "tier": tier,
        "final_coverage": r.final_coverage,
        "max_coverage": r.max_coverage,
        "actions": r.n_actions,
        "termination": r.termination,
        "final_cost": r.final_cost,
    }


@dataclass(frozen=True)
class BenchConfig:
    policy: PolicyName = "mpc"
    goal: GoalKind = "smooth"
    tiers: tuple[int, ...] = (1, 2, 3)
    episodes: int = 20
    seed: int = 0
    planner: PlannerConfig = PlannerConfig()
    tier_params: TierParams = TierParams()

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")


def episode_seeds(master: int, tier: int, index: int) -> tuple[int, int]:
    """(start-state seed, policy seed) of one benchmark episode."""
    ss = np.random.SeedSequence(master, spawn_key=(tier, index))
    a, b = ss.generate_state(2, np.uint64)
    return int(a), int(b)


def _policy(name: str, bounds: ActionBounds, rng: np.random.Generator):
    if name == "corner":
        return lambda s: corner_pull_policy(s, bounds)
    if name == "highest":
        return lambda s: highest_policy(s, bounds)
    if name == "wrinkle":
        return lambda s: wrinkle_policy(s, bounds)
    if name == "random":
        return lambda s: random_policy(s, bounds, rng)
    return None


def run_one(cfg: BenchConfig, tier: int, index: int) -> dict:
    start_seed, policy_seed = episode_seeds(cfg.seed, tier, index)
    start = tier_start(tier, np.random.default_rng(start_seed), cfg.tier_params)
    rng = np.random.default_rng(policy_seed)
    # candidate evaluation stays in-process; parallelism is across episodes
    planner = replace(cfg.planner, jobs=1)
    goal = _goal(cfg.goal)
    result = run_episode(start, goal, planner, rng, policy=_policy(cfg.policy, planner.bounds, rng))
    return episode_row(result, start_seed, tier)


_GOALS: dict = {}


def _goal(kind: GoalKind):
    if kind not in _GOALS:
        _GOALS[kind] = make_goal(kind)
    return _GOALS[kind]


def _run_args(args) -> dict:
    return run_one(*args)


def run_benchmark(cfg: BenchConfig, jobs: int = 1, progress=None) -> dict:
    """Run every (tier, episode) pair; rows come back in a fixed order, so
    the output does not depend on ``jobs``."""
    work = [(cfg, t, i) for t in cfg.tiers for i in range(cfg.episodes)]
    rows = []
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            for row in pool.map(_run_args, work):
                rows.append(row)
                if progress:
                    progress(row)
    else:
        for w in work:
            rows.append(_run_args(w))
            if progress:
                progress(rows[-1])
    by_tier = {str(t): asdict(summarize([r for r in rows if r["tier"] == t])) for t in cfg.tiers}
    return {
        "config": _config_json(cfg),
        "episodes": rows,
        "summary": by_tier,
    }


def _config_json(cfg: BenchConfig) -> dict:
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return str(v)
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        return v

    return clean(asdict(cfg))


def save_results(results: dict, path) -> None:
    Path(path).write_text(json.dumps(results, indent=2, sort_keys=True) + "\n")


def load_results(path) -> dict:
    return json.loads(Path(path).read_text())


def compare(a: dict, b: dict) -> dict:
    """Rank tests on final coverage and action counts of two result files."""
    out = {}
    for key in ("final_coverage", "actions"):
        x = [r[key] for r in a["episodes"]]
        y = [r[key] for r in b["episodes"]]
        u, p = mann_whitney_u(x, y)
        out[key] = {"U": u, "p": p, "mean_a": float(np.mean(x)), "mean_b": float(np.mean(y))}
    return out


def format_table(results: dict) -> str:
    lines = [f"{'tier':>4}  {'n':>3}  {'final cov':>14}  {'max cov':>14}  {'actions':>12}  {'success':>7}"]
    for tier, s in results["summary"].items():
        lines.append(
            f"{tier:>4}  {s['episodes']:>3}  {s['final_coverage']:6.1f} ± {s['final_coverage_std']:5.1f}"
            f"  {s['max_coverage']:6.1f} ± {s['max_coverage_std']:5.1f}"
            f"  {s['actions']:4.1f} ± {s['actions_std']:4.1f}  {s['success_rate']:7.2f}"
        )
    return "\n".join(lines)
