#!/usr/bin/env python3
'''Monte Carlo coverage of the fixed-profile concentration bounds on the
coordination truth game at the pure (first-action, first-action) profile:
all three statistics over K in {20, 50, 200} and delta in {0.05, 0.1}.'''

import argparse
import os
import sys

import numpy as np

from cumg.bounds import coverage_experiment
from cumg.cli import write_csv
from cumg.closed_forms import coordination_game


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--trials", type=int, default=2000)
    args = ap.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    truth = coordination_game(0.6)
    profile = [np.array([1.0, 0.0]), np.array([1.0, 0.0])]
    rows = []
    failed = 0
    for statistic in ("mean", "mad", "cvar"):
        for delta in (0.05, 0.1):
            for K in (20, 50, 200):
                res = coverage_experiment(truth, profile, statistic, K,
                                          delta, args.trials, args.seed,
                                          cvar_level=0.3)
                rows.append((statistic, K, delta, res.bound, res.coverage,
                             res.threshold, res.passed))
                failed += 0 if res.passed else 1
                print("%-5s K=%-4d delta=%-5g coverage=%.4f (need %.4f) %s"
                      % (statistic, K, delta, res.coverage, res.threshold,
                         "pass" if res.passed else "FAIL"))
    write_csv(os.path.join(args.out_dir, "coverage.csv"),
              ("statistic", "K", "delta", "bound", "coverage", "threshold",
               "passed"), rows)
    sys.exit(1 if failed else 0)


if __name__ == "__main__":
    main()
