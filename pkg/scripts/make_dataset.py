"""Generate a random-policy dataset with one of the two recipes and export
its cost-pair training set.

    python scripts/make_dataset.py --recipe new --episodes 1000 --out runs/data-new
"""

import argparse
from pathlib import Path

import numpy as np

from fabric_mpc.data import DatasetConfig, export_cost_pairs, generate_dataset, read_episode


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--recipe", choices=("old", "new"), default="new")
    ap.add_argument("--episodes", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", required=True)
    ap.add_argument("--no-pairs", action="store_true", help="skip the cost-pair export")
    args = ap.parse_args()

    recipe = DatasetConfig.old if args.recipe == "old" else DatasetConfig.new
    cfg = recipe(episodes=args.episodes, seed=args.seed)
    manifest = generate_dataset(cfg, args.out, jobs=args.jobs)

    files = manifest["files"]
    picks = sum(e["corner_picks"] for e in files)
    total = sum(e["actions"] for e in files)
    tiers = np.bincount([e["tier"] for e in files], minlength=4)
    print(f"{len(files)} episodes, {total} actions, corner picks {picks / max(total, 1):.3f}, "
          f"tiers {tiers.tolist()}")

    # pairs need at least ten transitions per episode
    if not args.no_pairs and cfg.episode_len >= 10:
        out = Path(args.out)
        scale = export_cost_pairs((read_episode(out / e["file"]) for e in files), out / "cost_pairs.bin")
        print(f"cost pairs written, label normalizer {scale:.4f}")


if __name__ == "__main__":
    main()
