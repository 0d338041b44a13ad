#!/usr/bin/env python3
'''Out-of-sample means from an oos summary CSV: one line per player over
the gamma grid with a +-1 s.d. band.  Annotates the figure when both
players' means are nondecreasing in gamma.'''

import argparse
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from plot_common import PlotJob, SchemaError, add_io_args, read_columns, require_kind

SUMMARY_HEADER = ("gamma", "n_certified", "n_uncertified", "oos_mean_p1",
                  "oos_std_p1", "oos_mean_p2", "oos_std_p2")


def band(mean, std):
    'Lower/upper edges of the +-1 s.d. band.'
    return mean - std, mean + std


def trend_is_nondecreasing(cols):
    'True when both players oos means are nondecreasing along the gamma grid.'
    order = np.argsort(cols["gamma"])
    return all(np.all(np.diff(cols["oos_mean_p%d" % p][order]) >= 0.0)
               for p in (1, 2))


def _render(job):
    cols = read_columns(job.input_csv, SUMMARY_HEADER)
    order = np.argsort(cols["gamma"])
    g = cols["gamma"][order]
    fig, ax = plt.subplots(figsize=(5.4, 4.0))
    for p, color in ((1, "tab:blue"), (2, "tab:orange")):
        m = cols["oos_mean_p%d" % p][order]
        s = cols["oos_std_p%d" % p][order]
        lo, hi = band(m, s)
        ax.plot(g, m, "o-", color=color, label="player %d" % p)
        ax.fill_between(g, lo, hi, color=color, alpha=0.2)
    if trend_is_nondecreasing(cols):
        ax.text(0.03, 0.97, "means nondecreasing in gamma",
                transform=ax.transAxes, va="top", fontsize=9,
                bbox=dict(boxstyle="round", fc="lightyellow", ec="0.6"))
    ax.set_xlabel("gamma")
    ax.set_ylabel("out-of-sample mean payoff")
    ax.set_title(job.title or "out-of-sample payoff, mean +- 1 s.d.")
    ax.legend(loc="lower right")
    fig.tight_layout()
    return fig


def plot_oos(job):
    require_kind(job, "oos")
    fig = _render(job)
    fig.savefig(job.output_path, dpi=job.dpi)
    plt.close(fig)
    return job.output_path


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    add_io_args(parser)
    args = parser.parse_args(argv)
    try:
        job = PlotJob(input_csv=args.input_csv, kind="oos",
                      output_path=args.output_path, title=args.title,
                      dpi=args.dpi)
        out = plot_oos(job)
    except SchemaError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    print("wrote %s" % out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
