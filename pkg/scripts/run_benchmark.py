"""Train all six models on the separable synthetic gradebook and print the comparison table.

    python3 scripts/run_benchmark.py [--config configs/synthetic_benchmark.json] [--out-dir DIR]
"""
import argparse
import sys
import time
from pathlib import Path

from midcourse.experiment import ExperimentConfig, run_experiment

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(ROOT / "configs" / "synthetic_benchmark.json"))
    ap.add_argument("--out-dir")
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()

    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    start = time.perf_counter()
    arts = run_experiment(cfg, args.out_dir, log=lambda m: print(m, file=sys.stderr))
    print(arts.table, end="")
    for name, res in arts.grid_results.items():
        print(f"{name}: best {res.best_config} (cv accuracy {res.best_cv_score:.3f})")
    print(f"{time.perf_counter() - start:.1f} s, artifacts in {arts.out_dir}")


if __name__ == "__main__":
    main()
