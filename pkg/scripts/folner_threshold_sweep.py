"""Følner plans on DA2 as the Pliss threshold a' moves toward the CAT2 rate.

Writes one row per (a', level): plan size, Lambda size and eta mass.
"""
import argparse
import csv
import sys

from pliss_lab.config import ExperimentConfig
from pliss_lab.experiments import run_folner

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--thresholds", type=float, nargs="+", default=[0.1, 0.3, 0.5, 0.7, 0.9])
    ap.add_argument("--N", type=int, default=5000)
    ap.add_argument("--samples", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="-")
    args = ap.parse_args()
    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["a_prime", "n", "q_size", "lambda_size", "eta_total", "invariance_defect", "items_pass"])
    for ap_ in args.thresholds:
        params = {"a": ap_ - 0.05, "a_prime": ap_, "a_pp": ap_ + 0.05, "N": args.N, "samples": args.samples}
        res = run_folner(ExperimentConfig("folner", "da2", seed=args.seed, params=params))
        header, rows = res.tables["folner_levels.csv"]
        col = {h: i for i, h in enumerate(header)}
        ok = res.criteria[0].passed
        for r in rows:
            w.writerow([ap_, r[col["n"]], r[col["q_size"]], r[col["lambda_size"]], r[col["eta_total"]],
                        r[col["invariance_defect"]], ok])
