import json
from dataclasses import replace

import numpy as np
import pytest

from fabric_mpc.bench import (
    BenchConfig,
    Summary,
    compare,
    episode_seeds,
    format_table,
    load_results,
    run_benchmark,
    save_results,
    summarize,
)
from fabric_mpc.optimize import CemConfig
from fabric_mpc.plan import PlannerConfig


def row(cov, actions=3, term="max_actions"):
    return {"final_coverage": cov, "max_coverage": cov, "actions": actions, "termination": term}


def test_summarize_examples():
    s = summarize([row(70.0)])
    assert s.final_coverage == 70.0 and s.final_coverage_std == 0.0
    s = summarize([row(80.0), row(100.0, term="success")])
    assert s.final_coverage == 90.0
    assert s.final_coverage_std == pytest.approx(14.142, abs=1e-3)
    assert s.success_rate == 0.5
    with pytest.raises(ValueError):
        summarize([])


def test_episode_seeds_distinct():
    seeds = {episode_seeds(0, t, i) for t in (1, 2, 3) for i in range(10)}
    assert len(seeds) == 30


def test_bench_config_validation():
    with pytest.raises(ValueError):
        BenchConfig(policy="oracle")
    with pytest.raises(ValueError):
        BenchConfig(episodes=0)


def test_corner_benchmark_independent_of_jobs(tmp_path):
    planner = PlannerConfig(max_actions=2)
    cfg = BenchConfig(policy="corner", tiers=(1, 3), episodes=2, planner=planner)
    a = run_benchmark(cfg, jobs=1)
    b = run_benchmark(cfg, jobs=2)
    assert a == b
    assert set(a["summary"]) == {"1", "3"}
    save_results(a, tmp_path / "r.json")
    assert load_results(tmp_path / "r.json") == json.loads(json.dumps(a))
    assert "tier" in format_table(a)


def test_mpc_benchmark_smoke():
    planner = PlannerConfig(horizon=1, max_actions=1, cem=CemConfig(population=20, iterations=1))
    res = run_benchmark(BenchConfig(policy="mpc", tiers=(2,), episodes=1, planner=planner))
    ep = res["episodes"][0]
    assert ep["tier"] == 2 and ep["actions"] <= 1


def test_compare():
    a = {"episodes": [row(c, 5) for c in (90, 91, 92, 93)]}
    b = {"episodes": [row(c, 9) for c in (60, 61, 62, 63)]}
    res = compare(a, b)
    assert res["final_coverage"]["U"] == 16.0
    assert res["final_coverage"]["p"] == pytest.approx(2 / 70)
    assert res["actions"]["mean_a"] == 5
