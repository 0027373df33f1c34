"""Fold-goal threshold calibration over scripted folds and near misses.

    python scripts/calibrate.py --count 20 --seeds 0,1,2
"""

import argparse
import json
from dataclasses import asdict

from fabric_mpc.plan import calibrate_fold


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=20, help="states per cluster")
    ap.add_argument("--seeds", default="0")
    ap.add_argument("--out", help="optional JSON output")
    args = ap.parse_args()

    report = []
    for seed in (int(s) for s in args.seeds.split(",")):
        for kind in ("fold1", "fold2"):
            cal = calibrate_fold(kind, seed=seed, count=args.count)
            for name, c in (("pixel", cal.pixel), ("vertex", cal.vertex)):
                print(f"seed {seed} {kind} {name:6s} threshold {c.threshold:10.3f}  "
                      f"folds <= {c.success_max:10.3f}  misses >= {c.failure_min:10.3f}  "
                      f"margin/gap {c.relative_margin:.3f}")
                report.append({"seed": seed, "goal": kind, "cost": name, **asdict(c)})
    if args.out:
        with open(args.out, "w") as f:
            json.dump(report, f, indent=2)


if __name__ == "__main__":
    main()
