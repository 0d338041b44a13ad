'''Shared plumbing for the plot scripts: job description and a strict CSV
reader.  The scripts are read-only consumers of the CLI's CSV outputs —
nothing here recomputes game quantities, and a reordered or corrupted
column fails loudly instead of rendering a silently wrong figure.'''

import csv
import os
from dataclasses import dataclass

import numpy as np

PLOT_KINDS = ("surface", "oos", "cvar_panels")


class SchemaError(Exception):
    'Input CSV missing, malformed, or not matching the expected schema.'


@dataclass
class PlotJob:
    input_csv: str
    kind: str
    output_path: str
    title: str = None
    levels: int = 12        # contour density (surface)
    dpi: int = 150

    def __post_init__(self):
        if self.kind not in PLOT_KINDS:
            raise SchemaError("unknown plot kind %r (expected one of %s)"
                              % (self.kind, "|".join(PLOT_KINDS)))
        if not os.path.isfile(self.input_csv):
            raise SchemaError("input CSV not found: %s" % self.input_csv)


def require_kind(job, kind):
    if job.kind != kind:
        raise SchemaError("job kind %r handed to the %s renderer"
                          % (job.kind, kind))


def read_columns(path, expected_header):
    '''Read a CSV whose header matches expected_header exactly (same names,
    same order); returns {column: float ndarray}.'''
    expected = list(expected_header)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise SchemaError("cannot open %s: %s" % (path, exc))
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("%s is empty" % path)
        if header != expected:
            raise SchemaError("%s: header %s does not match expected %s"
                              % (path, header, expected))
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(expected):
                raise SchemaError("%s line %d: %d fields, expected %d"
                                  % (path, lineno, len(row), len(expected)))
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise SchemaError("%s line %d: non-numeric field in %s"
                                  % (path, lineno, row))
    if not rows:
        raise SchemaError("%s has no data rows" % path)
    data = np.asarray(rows)
    return {name: data[:, k] for k, name in enumerate(expected)}


def add_io_args(parser):
    parser.add_argument("--in", dest="input_csv", required=True,
                        help="input CSV (a CLI output)")
    parser.add_argument("--out", dest="output_path", required=True,
                        help="output image path")
    parser.add_argument("--title", default=None)
    parser.add_argument("--dpi", type=int, default=150)
