"""Command-line entry point: ``fabric-mpc <command> [flags]``.

Exit status is 0 on success, 1 on a usage error and 2 on a runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .action import ActionBounds
from .optimize import CemConfig, CmaEsConfig

PRESETS = {
    # data recipe, bounds, corner bias
    "vsf1": {"dataset": "old", "bounds": 0.4, "corner_bias": 0.0},
    "vsf2": {"dataset": "new", "bounds": 0.6, "corner_bias": 0.3},
}
COSTS = {"pixel": "pixel_l2", "vertex": "vertex_l2", "pixel_l2": "pixel_l2", "vertex_l2": "vertex_l2"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _tiers(text: str) -> tuple[int, ...]:
    try:
        tiers = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid tier list {text!r}") from None
    if not tiers or any(t not in (0, 1, 2, 3) for t in tiers):
        raise argparse.ArgumentTypeError("tiers must be in 0..3")
    return tiers


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="master seed for all randomness")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--preset", choices=sorted(PRESETS), help="vsf1: 0.4 bounds; vsf2: 0.6 bounds, corner bias 0.3")


def _planner_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--goal", choices=("smooth", "fold1", "fold2"), default="smooth")
    p.add_argument("--optimizer", choices=("cem", "cmaes"), default="cem")
    p.add_argument("--cost", choices=sorted(COSTS), default="pixel")
    p.add_argument("--vertex-mode", choices=("sum_sq", "sum_norm"), default="sum_sq")
    p.add_argument("--bounds", type=float, help="max pull per axis (default 0.4, or the preset's)")
    p.add_argument("--corner-bias", type=float, help="corner-pick probability of the first CEM population")
    p.add_argument("--horizon", type=int, default=5)
    p.add_argument("--max-actions", type=int, default=15)
    p.add_argument("--coverage-success", type=float, default=92.0)
    d = CemConfig()
    p.add_argument("--cem-iterations", type=int, default=d.iterations)
    p.add_argument("--cem-population", type=int, default=d.population)
    p.add_argument("--cem-elite-frac", type=float, default=d.elite_frac)
    p.add_argument("--cem-alpha", type=float, default=d.alpha)
    c = CmaEsConfig()
    p.add_argument("--cmaes-iterations", type=int, default=c.iterations)
    p.add_argument("--cmaes-population", type=int, default=c.population)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fabric-mpc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-data", help="generate a random-policy episode dataset")
    _common(g)
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--episodes", type=int, default=100)
    g.add_argument("--episode-len", type=int)
    g.add_argument("--bounds", type=float)
    g.add_argument("--corner-bias", type=float)
    g.add_argument("--tiers", type=_tiers, default=(0, 1, 2, 3))
    g.add_argument("--no-randomize", action="store_true", help="canonical rendering for every episode")

    b = sub.add_parser("bench", help="run a benchmark, or compare two result files")
    _common(b)
    b.add_argument("--policy", choices=("mpc", "corner", "highest", "wrinkle", "random"), default="mpc")
    b.add_argument("--tier", type=_tiers, default=(1, 2, 3), help="tier or comma list")
    b.add_argument("--episodes", type=int, default=20, help="episodes per tier")
    b.add_argument("--out", help="results JSON (default results.json)")
    b.add_argument("--compare", nargs=2, metavar=("A", "B"), help="rank-test two results files")
    _planner_flags(b)

    pl = sub.add_parser("plan", help="plan one episode and save it")
    _common(pl)
    pl.add_argument("--tier", type=int, choices=(0, 1, 2, 3), default=0, help="start-state tier")
    pl.add_argument("--out", required=True, help="episode file to write")
    _planner_flags(pl)

    r = sub.add_parser("render", help="render one step of an episode file")
    r.add_argument("--episode", required=True)
    r.add_argument("--step", type=int, default=0)
    r.add_argument("--out", required=True, help="PPM path; depth goes to the sibling .pgm")

    m = sub.add_parser("make-goal", help="build a goal, write it as a one-step episode and calibrate")
    _common(m)
    m.add_argument("--goal", choices=("smooth", "fold1", "fold2"), required=True)
    m.add_argument("--out", required=True, help="episode file for the goal")
    m.add_argument("--calibration-count", type=int, default=20)
    return parser


def _resolve(args) -> tuple[float, float]:
    preset = PRESETS.get(args.preset or "", {})
    bounds = args.bounds if args.bounds is not None else preset.get("bounds", 0.4)
    bias = args.corner_bias if args.corner_bias is not None else preset.get("corner_bias", 0.0)
    return bounds, bias


def _planner(args):
    from .plan import PlannerConfig, fold_thresholds

    bounds, bias = _resolve(args)
    cem = CemConfig(
        iterations=args.cem_iterations,
        population=args.cem_population,
        elite_frac=args.cem_elite_frac,
        alpha=args.cem_alpha,
    )
    cmaes = CmaEsConfig(iterations=args.cmaes_iterations, population=args.cmaes_population)
    return PlannerConfig(
        horizon=args.horizon,
        optimizer=args.optimizer,
        cem=cem,
        cmaes=cmaes,
        cost=COSTS[args.cost],
        vertex_mode=args.vertex_mode,
        bounds=ActionBounds(bounds),
        corner_bias=bias,
        max_actions=args.max_actions,
        coverage_success=args.coverage_success,
        thresholds=None if args.goal == "smooth" else fold_thresholds(args.goal),
        jobs=args.jobs,
    )


def cmd_gen_data(args, out) -> int:
    from .data import DatasetConfig, generate_dataset

    preset = PRESETS.get(args.preset or "", {"dataset": "old"})
    make = DatasetConfig.new if preset["dataset"] == "new" else DatasetConfig.old
    kw = {"episodes": args.episodes, "seed": args.seed, "tiers": args.tiers, "randomize": not args.no_randomize}
    if args.episode_len is not None:
        kw["episode_len"] = args.episode_len
    if args.bounds is not None:
        kw["max_pull"] = args.bounds
    if args.corner_bias is not None:
        kw["corner_bias"] = args.corner_bias
    cfg = make(**kw)
    manifest = generate_dataset(cfg, args.out, jobs=args.jobs)
    picks = sum(e["corner_picks"] for e in manifest["files"])
    total = sum(e["actions"] for e in manifest["files"])
    print(f"wrote {len(manifest['files'])} episodes to {args.out}", file=out)
    print(f"corner-pick fraction {picks / max(total, 1):.3f}", file=out)
    return 0


def cmd_bench(args, out) -> int:
    from .bench import BenchConfig, compare, format_table, load_results, run_benchmark, save_results
    from .plan import calibrate_fold

    if args.compare:
        a, b = (load_results(p) for p in args.compare)
        res = compare(a, b)
        for key, v in res.items():
            print(f"{key:>15}: U={v['U']:.1f}  p={v['p']:.4g}  mean {v['mean_a']:.2f} vs {v['mean_b']:.2f}", file=out)
        if args.out:
            Path(args.out).write_text(json.dumps(res, indent=2, sort_keys=True) + "\n")
        return 0
    planner = _planner(args)
    cfg = BenchConfig(
        policy=args.policy, goal=args.goal, tiers=args.tier, episodes=args.episodes, seed=args.seed, planner=planner
    )
    results = run_benchmark(cfg, jobs=args.jobs)
    if args.goal != "smooth":
        cal = calibrate_fold(args.goal)
        results["calibration"] = {"pixel": asdict(cal.pixel), "vertex": asdict(cal.vertex)}
    path = args.out or "results.json"
    save_results(results, path)
    print(format_table(results), file=out)
    print(f"results written to {path}", file=out)
    return 0


def _episode_record(result, seed: int):
    from .data import EpisodeRecord
    from .observe import CANONICAL, render_points

    n = int(round(np.sqrt(result.meshes[0].shape[0])))
    obs = np.array([render_points(m, n, CANONICAL) for m in result.meshes])
    actions = np.array([a.as_array() for a in result.actions]).reshape(-1, 4)
    return EpisodeRecord(np.array(result.meshes), obs, actions, np.array(result.coverage), seed, CANONICAL)


def cmd_plan(args, out) -> int:
    from .data import write_episode
    from .plan import make_goal, run_episode
    from .policy import tier_start

    cfg = _planner(args)
    start_rng, plan_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(args.seed).spawn(2))
    start = tier_start(args.tier, start_rng)
    goal = make_goal(args.goal)
    result = run_episode(start, goal, cfg, plan_rng)
    write_episode(_episode_record(result, args.seed), args.out)
    print(f"success={str(result.success).lower()} actions={result.n_actions} "
          f"termination={result.termination} final_coverage={result.final_coverage:.2f} "
          f"final_cost={result.final_cost:.4g}", file=out)
    return 0


def cmd_render(args, out) -> int:
    from .data import read_episode
    from .observe import write_pgm, write_ppm

    rec = read_episode(args.episode)
    if not 0 <= args.step < len(rec.observations):
        raise ValueError(f"step {args.step} outside 0..{len(rec.observations) - 1}")
    obs = rec.observations[args.step]
    ppm = Path(args.out)
    write_ppm(ppm, obs)
    write_pgm(ppm.with_suffix(".pgm"), obs)
    print(f"wrote {ppm} and {ppm.with_suffix('.pgm')}", file=out)
    return 0


def cmd_make_goal(args, out) -> int:
    from .data import EpisodeRecord, write_episode
    from .observe import CANONICAL, coverage
    from .plan import calibrate_fold, make_goal

    goal = make_goal(args.goal)
    rec = EpisodeRecord(goal.mesh.points[None], goal.obs[None], np.zeros((0, 4)),
                        np.array([coverage(goal.mesh)]), args.seed, CANONICAL)
    write_episode(rec, args.out)
    info = {"goal": args.goal, "coverage": float(rec.coverage[0])}
    if args.goal != "smooth":
        cal = calibrate_fold(args.goal, seed=args.seed, count=args.calibration_count, goal=goal)
        info["calibration"] = {"pixel": asdict(cal.pixel), "vertex": asdict(cal.vertex)}
    Path(args.out).with_suffix(".json").write_text(json.dumps(info, indent=2, sort_keys=True) + "\n")
    print(json.dumps(info, sort_keys=True), file=out)
    return 0


COMMANDS = {
    "gen-data": cmd_gen_data,
    "bench": cmd_bench,
    "plan": cmd_plan,
    "render": cmd_render,
    "make-goal": cmd_make_goal,
}


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(e, file=err)
        return 1
    except SystemExit as e:
        # --help
        return 0 if e.code in (0, None) else 1
    try:
        return COMMANDS[args.command](args, out)
    except (OSError, ValueError) as e:
        print(f"fabric-mpc {args.command}: {e}", file=err)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
