#!/usr/bin/env python3
'''CVaR-mix sweep on the two-sample example game: closed form next to the
complementarity solver over a (gamma_c, cvar_level) grid.'''

import argparse
import os
import sys

from cumg.cli import ExperimentConfig, run_cvar_sweep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    config = ExperimentConfig(
        experiment="cvar_sweep",
        gamma_grid=[round(0.1 * i, 1) for i in range(1, 10)],
        alpha_grid=[0.2, 0.35, 0.5, 0.7, 0.9],
        seed=args.seed,
        output_path=os.path.join(args.out_dir, "cvar_sweep.csv"))
    sys.exit(run_cvar_sweep(config))


if __name__ == "__main__":
    main()
