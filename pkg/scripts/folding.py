"""Folding runs from the flat sheet: single diagonal fold and double fold.

Each configuration uses the wider 0.6 pull bounds with corner-biased first
populations, as the folding results need.  Success is judged by the
calibrated thresholds.

    python scripts/folding.py --episodes 20
"""

import argparse
import json
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from fabric_mpc.action import NEW_BOUNDS
from fabric_mpc.cloth import init_flat
from fabric_mpc.optimize import CemConfig, CmaEsConfig
from fabric_mpc.plan import PlannerConfig, fold_thresholds, make_goal, run_episode

RUNS = {
    "fold1-cem-pixel": dict(goal="fold1", optimizer="cem", cost="pixel_l2", max_actions=3),
    "fold1-cmaes-vertex": dict(goal="fold1", optimizer="cmaes", cost="vertex_l2", max_actions=3),
    "fold2-cem-pixel": dict(goal="fold2", optimizer="cem", cost="pixel_l2", max_actions=5),
    "fold2-cmaes-vertex": dict(goal="fold2", optimizer="cmaes", cost="vertex_l2", max_actions=5),
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--episodes", type=int, default=20)
    ap.add_argument("--runs", default=",".join(RUNS))
    ap.add_argument("--population", type=int, default=2000, help="CEM population")
    ap.add_argument("--iterations", type=int, default=10, help="CEM iterations")
    ap.add_argument("--cmaes-iterations", type=int, default=250)
    ap.add_argument("--out", default="runs/folding.json")
    args = ap.parse_args()

    flat = init_flat()
    report = {}
    for name in args.runs.split(","):
        run = RUNS[name]
        goal = make_goal(run["goal"])
        cfg = PlannerConfig(
            optimizer=run["optimizer"],
            cost=run["cost"],
            cem=CemConfig(population=args.population, iterations=args.iterations),
            cmaes=CmaEsConfig(iterations=args.cmaes_iterations),
            bounds=NEW_BOUNDS,
            corner_bias=0.3,
            max_actions=run["max_actions"],
            thresholds=fold_thresholds(run["goal"]),
        )
        t0 = time.time()
        rows = []
        for seed in range(args.episodes):
            r = run_episode(flat, goal, cfg, np.random.default_rng(seed))
            rows.append({"seed": seed, "success": r.success, "actions": len(r.actions), "cost": r.final_cost})
            print(f"  {name} seed {seed}: {'ok' if r.success else '--'} {len(r.actions)} actions "
                  f"cost {r.final_cost:.1f}", flush=True)
        wins = [x for x in rows if x["success"]]
        steps = [x["actions"] for x in wins]
        report[name] = {
            "successes": len(wins),
            "episodes": len(rows),
            "actions_mean": float(np.mean(steps)) if steps else None,
            "thresholds": asdict(cfg.thresholds),
            "episodes_detail": rows,
        }
        print(f"{name}: {len(wins)}/{len(rows)} in {time.time() - t0:.0f} s", flush=True)

    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(json.dumps(report, indent=2) + "\n")


if __name__ == "__main__":
    main()
