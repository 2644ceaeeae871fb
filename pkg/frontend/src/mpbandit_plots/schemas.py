"""Column layouts of the benchmark CSV files, schema version 1.

These mirror the writer side exactly. Renderers refuse files that deviate
instead of guessing: the benchmark CLI is the only supported producer, and
a changed layout means the file is from an incompatible version.
"""

import os

import pandas as pd

SCHEMA_VERSION = 1

SUMMARY = ("rep", "policy", "final_pseudo_regret", "final_realized_regret",
           "term_a", "term_b", "term_c", "collisions_total",
           "switches_total", "transitions_1", "transitions_2",
           "transitions_3", "transitions_4", "transitions_5")
CURVES = ("policy", "t", "mean_regret", "std_regret",
          "mean_cum_collisions", "lb_ours_times_logt", "lb_zhao_times_logt")
HIST = ("policy", "bin_left", "bin_right", "count")
LOWER_BOUNDS = ("M", "lb_ours", "lb_zhao")


class SchemaError(Exception):
    """Input file does not match the expected column layout."""


def load_csv(path, expected):
    """Read a benchmark CSV and verify its exact column sequence.

    The diagnostic names the first offending column so a reader can tell a
    truncated file from a reordered or foreign one.
    """
    name = os.path.basename(path)
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError:
        raise SchemaError("%s: file not found" % name)
    except Exception as exc:
        raise SchemaError("%s: unreadable as CSV (%s)" % (name, exc))
    got = list(frame.columns)
    want = list(expected)
    for pos, col in enumerate(want):
        if pos >= len(got):
            raise SchemaError("%s: missing column '%s'" % (name, col))
        if got[pos] != col:
            raise SchemaError("%s: expected column '%s' at position %d, found '%s'"
                              % (name, col, pos, got[pos]))
    if len(got) > len(want):
        raise SchemaError("%s: unexpected column '%s'" % (name, got[len(want)]))
    return frame
