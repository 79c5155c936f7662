"""How the DA2 bump strength moves chi_min, the entropy rate and the Pesin residual.

eps = 0 is CAT2; larger eps weakens expansion near the fixed point.
"""
import argparse
import csv
import sys

import numpy as np

from pliss_lab.cocycle import chi_F_min_ensemble
from pliss_lab.config import stream_rng
from pliss_lab.entropy import pesin_check
from pliss_lab.models import make_model

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--eps", type=float, nargs="+", default=[0.0, 0.1, 0.25, 0.4])
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--N", type=int, default=10_000)
    ap.add_argument("--orbits", type=int, default=200)
    ap.add_argument("--length", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["eps", "chi_min_median", "chi_min_positive_fraction", "h_est", "jac_integral", "residual"])
    for eps in args.eps:
        m = make_model("da2", eps=eps)
        rng = stream_rng(args.seed, 0)
        chi = chi_F_min_ensemble(m, m.random_points(rng, args.samples), 8, args.N)
        pes = pesin_check(m, m.random_points(rng, args.orbits), args.length, 4, 7)
        w.writerow([eps, float(np.median(chi)), float(np.mean(chi > 0)), pes.h_est, pes.jac_integral, pes.residual])
