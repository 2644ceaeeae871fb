"""Render benchmark CSVs into figures.

Four figure kinds: regret curves (linear or log-log) with the lower-bound
overlay, per-policy final-regret histogram panels, and the two-lower-bounds
comparison across player counts. Each render writes both PNG and SVG and
returns the plotted data series, so callers can verify that re-rendering
reproduces the same figure content.
"""

from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import schemas

DPI = 100

KINDS = ("curves", "curves-loglog", "histogram", "lb-comparison")


@dataclass
class FigureSpec:
    kind: str
    inputs: list
    out: str
    title: str = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError("unknown figure kind %r (choose from %s)"
                             % (self.kind, ", ".join(KINDS)))
        if not isinstance(self.inputs, (list, tuple)) or len(self.inputs) != 1:
            raise ValueError("kind %r takes exactly one input file" % self.kind)


def _policy_groups(frame):
    # groupby(sort=False) keeps the writer's policy order for stable legends
    return frame.groupby("policy", sort=False)


def _save(fig, spec):
    png = spec.out + ".png"
    svg = spec.out + ".svg"
    fig.savefig(png, dpi=DPI)
    fig.savefig(svg, dpi=DPI, metadata={"Date": None})
    width, height = (int(round(v * DPI)) for v in fig.get_size_inches())
    plt.close(fig)
    return png, svg, width, height


def _series(x, y):
    return [(float(a), float(b)) for a, b in zip(x, y)]


def _render_curves(spec, loglog):
    frame = schemas.load_csv(spec.inputs[0], schemas.CURVES)
    fig, ax = plt.subplots(figsize=(8, 5))
    series = {}
    first = None
    for policy, block in _policy_groups(frame):
        ax.plot(block["t"], block["mean_regret"], label=str(policy), linewidth=1.4)
        series[str(policy)] = _series(block["t"], block["mean_regret"])
        if first is None:
            first = block
    # identical in every policy block of a merged file; plot once
    ax.plot(first["t"], first["lb_ours_times_logt"], color="black",
            linewidth=1.8, label="lower bound")
    series["lower bound"] = _series(first["t"], first["lb_ours_times_logt"])
    if loglog:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel("round t")
    ax.set_ylabel("mean cumulative regret")
    ax.legend()
    if spec.title:
        ax.set_title(spec.title)
    fig.tight_layout()
    return fig, series


def _render_histogram(spec):
    frame = schemas.load_csv(spec.inputs[0], schemas.HIST)
    groups = list(_policy_groups(frame))
    fig, axes = plt.subplots(1, len(groups),
                             figsize=(4 * len(groups), 3.2), squeeze=False)
    series = {}
    for ax, (policy, block) in zip(axes[0], groups):
        widths = block["bin_right"] - block["bin_left"]
        ax.bar(block["bin_left"], block["count"], width=widths,
               align="edge", edgecolor="white")
        ax.set_title(str(policy))
        ax.set_xlabel("final regret")
        series[str(policy)] = _series(block["bin_left"], block["count"])
    axes[0][0].set_ylabel("repetitions")
    if spec.title:
        fig.suptitle(spec.title)
    fig.tight_layout()
    return fig, series


def _render_lb_comparison(spec):
    frame = schemas.load_csv(spec.inputs[0], schemas.LOWER_BOUNDS)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.plot(frame["M"], frame["lb_ours"], marker="o", label="ours")
    ax.plot(frame["M"], frame["lb_zhao"], marker="s", label="zhao")
    ax.set_xticks(np.asarray(frame["M"]))
    ax.set_xlabel("number of players M")
    ax.set_ylabel("lower-bound constant")
    ax.legend()
    if spec.title:
        ax.set_title(spec.title)
    fig.tight_layout()
    series = {"ours": _series(frame["M"], frame["lb_ours"]),
              "zhao": _series(frame["M"], frame["lb_zhao"])}
    return fig, series


def render(spec):
    """Render one figure and return what was drawn.

    Returns a dict with the written png/svg paths, the pixel dimensions, and
    the plotted series keyed by legend label. Inputs are opened read-only.
    """
    if spec.kind == "curves":
        fig, series = _render_curves(spec, loglog=False)
    elif spec.kind == "curves-loglog":
        fig, series = _render_curves(spec, loglog=True)
    elif spec.kind == "histogram":
        fig, series = _render_histogram(spec)
    else:
        fig, series = _render_lb_comparison(spec)
    png, svg, width, height = _save(fig, spec)
    return {"png": png, "svg": svg, "width": width, "height": height,
            "series": series}
