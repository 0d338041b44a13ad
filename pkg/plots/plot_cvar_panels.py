#!/usr/bin/env python3
'''Four-panel view of a cvar sweep CSV: y1, rho1, z1, var1 against the
cvar level, one curve per gamma_c.  A dashed gridline marks the level-0.5
regime change where the lower-tail set switches atoms.'''

import argparse
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from plot_common import PlotJob, SchemaError, add_io_args, read_columns, require_kind

SWEEP_HEADER = ("gamma_c", "cvar_level", "y1_closed", "y1_solver",
                "z1_closed", "z1_solver", "rho1_closed", "rho1_solver",
                "var1_closed", "var1_solver", "value2_closed",
                "value2_solver", "max_delta", "certified", "ok")

PANELS = (("y1_solver", "y1"), ("rho1_solver", "rho1"),
          ("z1_solver", "z1"), ("var1_solver", "var1"))


def curves_by_gamma(cols, column):
    'column values as {gamma_c: (sorted levels, values at those levels)}.'
    out = {}
    for g in np.unique(cols["gamma_c"]):
        m = cols["gamma_c"] == g
        order = np.argsort(cols["cvar_level"][m])
        out[float(g)] = (cols["cvar_level"][m][order], cols[column][m][order])
    return out


def _render(job):
    cols = read_columns(job.input_csv, SWEEP_HEADER)
    gammas = np.unique(cols["gamma_c"])
    cmap = plt.get_cmap("viridis")
    fig, axes = plt.subplots(2, 2, figsize=(8.4, 6.4), sharex=True)
    for ax, (column, label) in zip(axes.ravel(), PANELS):
        curves = curves_by_gamma(cols, column)
        for g in gammas:
            lv, v = curves[float(g)]
            ax.plot(lv, v, "o-", ms=3,
                    color=cmap(float(g) / max(gammas.max(), 1e-12)),
                    label="gamma_c=%g" % g)
        ax.axvline(0.5, color="0.4", lw=0.9, ls="--")
        ax.set_ylabel(label)
        ax.grid(alpha=0.25)
    for ax in axes[1]:
        ax.set_xlabel("cvar_level")
    axes[0, 0].legend(fontsize=7, ncol=2)
    fig.suptitle(job.title or "cvar game solution vs level, by gamma_c")
    fig.tight_layout()
    return fig


def plot_cvar_panels(job):
    require_kind(job, "cvar_panels")
    fig = _render(job)
    fig.savefig(job.output_path, dpi=job.dpi)
    plt.close(fig)
    return job.output_path


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    add_io_args(parser)
    args = parser.parse_args(argv)
    try:
        job = PlotJob(input_csv=args.input_csv, kind="cvar_panels",
                      output_path=args.output_path, title=args.title,
                      dpi=args.dpi)
        out = plot_cvar_panels(job)
    except SchemaError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    print("wrote %s" % out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
