#!/usr/bin/env python3
'''Pure-equilibrium threshold sweep on the two-sample coordination game,
plus payoff surfaces at p_hat = 0.6 for plotting.'''

import argparse
import os
import sys

from cumg.cli import ExperimentConfig, run_coord_sweep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    config = ExperimentConfig(
        experiment="coord_sweep",
        p_hat_grid=[round(0.50 + 0.01 * i, 2) for i in range(21)],
        gamma_grid=[0.2, 0.5, 0.8],
        seed=args.seed,
        output_path=os.path.join(args.out_dir, "coord_sweep.csv"))
    rc = run_coord_sweep(config)
    surf = ExperimentConfig(
        experiment="coord_sweep",
        p_hat_grid=[0.6],
        gamma_grid=[0.2, 0.8],
        surface_grid=41,
        seed=args.seed,
        output_path=os.path.join(args.out_dir, "coord_focus.csv"))
    rc = max(rc, run_coord_sweep(surf))
    sys.exit(rc)


if __name__ == "__main__":
    main()
