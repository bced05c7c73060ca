"""Show how few weak students in training push every model to predict them as good.

Runs the 162-student gradebook (4 weak students) and prints, per model, the
weak-class recall, what the weak test students were predicted as, and whether
the low-recall flag fired.

    python3 scripts/imbalance_demo.py [--out-dir DIR]
"""
import argparse
from pathlib import Path

from midcourse.data import CLASS_NAMES
from midcourse.experiment import ExperimentConfig, run_experiment

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(ROOT / "configs" / "imbalance_162.json"))
    ap.add_argument("--out-dir")
    args = ap.parse_args()

    arts = run_experiment(ExperimentConfig.load(args.config), args.out_dir)
    print(f"train class counts {arts.train.class_counts().tolist()}, "
          f"test class counts {arts.test.class_counts().tolist()} (G, F, W)")
    print(arts.table, end="")
    for r in arts.reports:
        weak_row = r.confusion.counts[2]
        as_what = ", ".join(f"{n}:{int(k)}" for n, k in zip(CLASS_NAMES, weak_row) if k)
        print(f"{r.model_name:<16} W recall {r.metrics.per_class['W'].recall:.2f}  "
              f"weak students predicted as [{as_what}]  "
              f"flag={r.flags['weak_recall_below_half']}")


if __name__ == "__main__":
    main()
