"""Run every experiment at full size and print the criteria table.

    python scripts/run_all.py --out runs/all --seed 0
"""
import argparse
import sys

from pliss_lab.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="runs/all")
    ap.add_argument("--seed", default="0")
    ap.add_argument("--self-test", action="store_true")
    args = ap.parse_args()
    argv = ["run", "--experiment", "all", "--seed", args.seed, "--out", args.out]
    if args.self_test:
        argv.append("--self-test")
    sys.exit(main(argv))
