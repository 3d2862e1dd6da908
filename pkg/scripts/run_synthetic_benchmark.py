#!/usr/bin/env python3
"""Train and evaluate every detection model on the synthetic benchmark.

Runs kd-cae, ni-cae, and cnn end to end on the same deterministic synthetic
dataset through the CLI, then merges the per-run reports into one table:

    python scripts/run_synthetic_benchmark.py --out bench --epochs 40
"""

import argparse
import sys

from anomdet.cli import main as cli


def run(argv) -> int:
    print("+ anomdet " + " ".join(argv))
    rc = cli(argv)
    if rc != 0:
        print(f"command failed with exit code {rc}", file=sys.stderr)
    return rc


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="bench", help="directory for the run folders")
    ap.add_argument("--shape", default="disk", choices=("disk", "rect"))
    ap.add_argument("--image-size", type=int, default=64)
    ap.add_argument("--n-train", type=int, default=100)
    ap.add_argument("--n-test", type=int, default=40)
    ap.add_argument("--epochs", type=int, default=40)
    ap.add_argument("--batch-size", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    ns = ap.parse_args()

    common = [
        "--data-root", f"synthetic:{ns.shape}",
        "--image-size", str(ns.image_size),
        "--n-test", str(ns.n_test),
        "--epochs", str(ns.epochs),
        "--batch-size", str(ns.batch_size),
        "--seed", str(ns.seed),
    ]
    runs = []
    for model in ("kd-cae", "ni-cae", "cnn"):
        out = f"{ns.out}/{model}"
        args = ["train", "--model", model, "--out", out, *common]
        if model == "cnn":
            # the supervised model needs labeled defects in its train split
            args += ["--n-train", str(2 * ns.n_train), "--train-defect-rate", "0.5"]
        else:
            args += ["--n-train", str(ns.n_train)]
        if model == "ni-cae":
            args += ["--noise-train", "on"]
        if run(args) != 0 or run(["eval", "--run", out]) != 0:
            return 1
        runs.append(out)
    return run(["report", *runs, "--out", ns.out])


if __name__ == "__main__":
    sys.exit(main())
