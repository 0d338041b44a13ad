#!/usr/bin/env python3
'''Payoff-surface heatmap from a coordination-sweep surface CSV (columns
x1U, x2L, rho).  Overlays the centroid loci (the x = 0.5 lines) and a star
on every grid corner that is a pure equilibrium of the tabulated surface:
rho there is maximal along both its row and its column, so neither player
gains by a unilateral grid deviation.'''

import argparse
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from plot_common import PlotJob, SchemaError, add_io_args, read_columns, require_kind

SURFACE_HEADER = ("x1U", "x2L", "rho")


def load_surface(path):
    'Surface CSV -> (x1 grid, x2 grid, rho matrix indexed [x1, x2]).'
    cols = read_columns(path, SURFACE_HEADER)
    x1 = np.unique(cols["x1U"])
    x2 = np.unique(cols["x2L"])
    if x1.size * x2.size != cols["rho"].size:
        raise SchemaError("%s: %d rows do not form a %dx%d grid"
                          % (path, cols["rho"].size, x1.size, x2.size))
    R = np.full((x1.size, x2.size), np.nan)
    i = np.searchsorted(x1, cols["x1U"])
    j = np.searchsorted(x2, cols["x2L"])
    R[i, j] = cols["rho"]
    if np.isnan(R).any():
        raise SchemaError("%s: grid has holes (duplicate rows?)" % path)
    return x1, x2, R


def pure_corner_stars(x1, x2, R, tol=1e-12):
    'Corners of the grid where rho is a row- and column-argmax.'
    stars = []
    for i in (0, x1.size - 1):
        for j in (0, x2.size - 1):
            if (R[i, j] >= R[:, j].max() - tol
                    and R[i, j] >= R[i, :].max() - tol):
                stars.append((float(x1[i]), float(x2[j])))
    return stars


def _render(job):
    x1, x2, R = load_surface(job.input_csv)
    fig, ax = plt.subplots(figsize=(5.4, 4.6))
    cf = ax.contourf(x2, x1, R, levels=job.levels, cmap="viridis")
    ax.contour(x2, x1, R, levels=job.levels, colors="k",
               linewidths=0.4, alpha=0.4)
    ax.axvline(0.5, color="w", lw=1.0, ls="--", alpha=0.8)
    ax.axhline(0.5, color="w", lw=1.0, ls="--", alpha=0.8)
    stars = pure_corner_stars(x1, x2, R)
    for xu, xl in stars:
        ax.plot(xl, xu, marker="*", ms=19, mfc="gold", mec="k", mew=1.0,
                zorder=5)
    ax.set_xlim(x2[0], x2[-1])
    ax.set_ylim(x1[0], x1[-1])
    ax.set_xlabel("x2L")
    ax.set_ylabel("x1U")
    ax.set_title(job.title or "payoff surface (%d pure-equilibrium corners)"
                 % len(stars))
    fig.colorbar(cf, ax=ax, label="rho")
    fig.tight_layout()
    return fig


def plot_surface(job):
    require_kind(job, "surface")
    fig = _render(job)
    fig.savefig(job.output_path, dpi=job.dpi)
    plt.close(fig)
    return job.output_path


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    add_io_args(parser)
    parser.add_argument("--levels", type=int, default=12,
                        help="contour level count")
    args = parser.parse_args(argv)
    try:
        job = PlotJob(input_csv=args.input_csv, kind="surface",
                      output_path=args.output_path, title=args.title,
                      levels=args.levels, dpi=args.dpi)
        out = plot_surface(job)
    except SchemaError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    print("wrote %s" % out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
