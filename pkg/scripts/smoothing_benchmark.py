"""Smoothing benchmark: MPC against the analytic baselines on Tiers 1-3.

Writes one results JSON per policy and prints a table for each, then
rank-tests MPC against every baseline on final coverage.

    python scripts/smoothing_benchmark.py --episodes 20 --out runs/smoothing
    python scripts/smoothing_benchmark.py --episodes 2 --population 400 --iterations 5  # quick look
"""

import argparse
import time
from pathlib import Path

from fabric_mpc.bench import BenchConfig, compare, format_table, run_benchmark, save_results
from fabric_mpc.optimize import CemConfig
from fabric_mpc.plan import PlannerConfig

BASELINES = ("corner", "highest", "wrinkle", "random")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--episodes", type=int, default=20)
    ap.add_argument("--tiers", default="1,2,3")
    ap.add_argument("--population", type=int, default=2000)
    ap.add_argument("--iterations", type=int, default=10)
    ap.add_argument("--horizon", type=int, default=5)
    ap.add_argument("--policies", default="mpc," + ",".join(BASELINES))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="runs/smoothing")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tiers = tuple(int(t) for t in args.tiers.split(","))
    planner = PlannerConfig(horizon=args.horizon, cem=CemConfig(population=args.population, iterations=args.iterations))

    results = {}
    for policy in args.policies.split(","):
        t0 = time.time()
        cfg = BenchConfig(policy=policy, tiers=tiers, episodes=args.episodes, seed=args.seed, planner=planner)
        res = run_benchmark(cfg, jobs=args.jobs, progress=lambda r: print(f"  tier {r['tier']} "
                            f"cov {r['final_coverage']:.1f} in {r['actions']} actions", flush=True))
        save_results(res, out / f"{policy}.json")
        results[policy] = res
        print(f"{policy}  ({time.time() - t0:.0f} s)\n{format_table(res)}\n", flush=True)

    if "mpc" in results:
        for other, res in results.items():
            if other == "mpc":
                continue
            c = compare(results["mpc"], res)["final_coverage"]
            print(f"mpc vs {other}: U={c['U']:.1f} p={c['p']:.3g} "
                  f"(means {c['mean_a']:.1f} vs {c['mean_b']:.1f})")


if __name__ == "__main__":
    main()
