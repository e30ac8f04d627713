"""Figures rendered from report documents only (never from the input data)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

COMPONENTS = ("unique", "redundant", "synergistic")
LABELS = {"unique": "U", "redundant": "R", "synergistic": "S"}
COLORS = {"unique": "#4c72b0", "redundant": "#dd8452", "synergistic": "#55a868"}
ORACLE_COLOR = "magenta"
DIRECTIONS = ("min", "max")


def component_table(report: dict):
    """(names, values, sd or None, oracle or None) arrays of shape (m, 3).

    Values come from the aggregate means when present, else from the single
    analysis, else from the oracle itself.
    """
    names = list(report["metadata"]["feature_names"])
    oracle = report.get("oracle")
    orc = None
    if oracle:
        by = {o["source"]: o for o in oracle}
        orc = np.array([[by[n][c] for c in COMPONENTS] for n in names])
    agg = report.get("aggregate")
    if agg:
        by = {f["feature"]: f for f in agg["features"]}
        vals = np.array([[by[n][f"{c}_mean"] for c in COMPONENTS] for n in names])
        sd = np.array([[by[n][f"{c}_sd"] for c in COMPONENTS] for n in names])
        return names, vals, sd, orc
    if report.get("features"):
        by = {f["source"]: f for f in report["features"]}
        vals = np.array([[by[n][c] for c in COMPONENTS] for n in names])
        return names, vals, None, orc
    if orc is not None:
        return names, orc, None, None
    raise ValueError("report holds no component values to plot")


def plot_components(report: dict, path, clip_zero: bool = False, ax=None):
    """Grouped U/R/S bars per feature, ±2 SD whiskers and oracle overlay segments."""
    names, vals, sd, orc = component_table(report)
    if clip_zero:
        vals = np.clip(vals, 0.0, None)
    m = len(names)
    width = 0.8 / len(COMPONENTS)
    own = ax is None
    if own:
        fig, ax = plt.subplots(figsize=(max(4.0, 1.3 * m + 1.5), 3.6))
    else:
        fig = ax.figure
    x = np.arange(m)
    for i, c in enumerate(COMPONENTS):
        pos = x - 0.4 + width * (i + 0.5)
        err = 2.0 * sd[:, i] if sd is not None else None
        ax.bar(pos, vals[:, i], width, yerr=err, color=COLORS[c], label=LABELS[c],
               capsize=2, error_kw={"elinewidth": 0.8})
        if orc is not None:
            ax.hlines(orc[:, i], pos - width / 2, pos + width / 2, colors=ORACLE_COLOR,
                      linewidth=2.0, label="oracle" if i == 0 else None)
    ax.axhline(0.0, color="black", linewidth=0.6)
    ax.set_xticks(x)
    ax.set_xticklabels(names)
    ax.set_ylabel("information [nats]")
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    ax.legend(frameon=False, fontsize=8, ncol=4)
    if own:
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path


def _oracle_sets(report: dict, direction: str):
    oracle = report.get("oracle")
    if not oracle:
        return None
    return {o["source"]: set(o["z" + direction]) for o in oracle}


def plot_selection(report: dict, path):
    """Percent-selected heatmaps (conditioning feature × source) for both searches.

    Cells that the oracle search selects get a red border.
    """
    agg = report["aggregate"]
    names = list(report["metadata"]["feature_names"])
    m = len(names)
    fig, axes = plt.subplots(1, 2, figsize=(2 * (0.6 * m + 1.8), 0.6 * m + 1.4))
    for ax, d in zip(axes, DIRECTIONS):
        grid = np.array([[agg["selection"][d][s][c] for s in names] for c in names])
        ax.imshow(grid, cmap="Greys", vmin=0.0, vmax=100.0)
        for ci in range(m):
            for si in range(m):
                if ci == si:
                    continue
                v = grid[ci, si]
                ax.text(si, ci, f"{v:.0f}", ha="center", va="center", fontsize=7,
                        color="white" if v > 60 else "black")
        chosen = _oracle_sets(report, d)
        if chosen:
            for si, s in enumerate(names):
                for ci, c in enumerate(names):
                    if c in chosen[s]:
                        ax.add_patch(Rectangle((si - 0.5, ci - 0.5), 1, 1, fill=False,
                                               edgecolor="red", linewidth=1.6))
        ax.set_xticks(range(m))
        ax.set_xticklabels(names)
        ax.set_yticks(range(m))
        ax.set_yticklabels(names)
        ax.set_xlabel("source")
        ax.set_ylabel("conditioning feature")
        ax.set_title(f"Z{d} selection [%]", fontsize=9)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_order(report: dict, path):
    """Per-iteration selection histograms: one panel per search direction and source."""
    agg = report["aggregate"]
    names = list(report["metadata"]["feature_names"])
    m = len(names)
    cmap = plt.get_cmap("tab10")
    fig, axes = plt.subplots(2, m, figsize=(1.8 * m + 1.0, 4.6), sharey=True, squeeze=False)
    for row, d in enumerate(DIRECTIONS):
        for col, s in enumerate(names):
            ax = axes[row, col]
            its = agg["order"][d][s]
            bottom = np.zeros(len(its))
            pos = np.arange(1, len(its) + 1)
            for ci, c in enumerate(names):
                h = np.array([it["selected_pct"][c] for it in its])
                if h.any():
                    ax.bar(pos, h, 0.7, bottom=bottom, color=cmap(ci % 10), label=c)
                bottom += h
            ax.set_ylim(0, 100)
            ax.set_xlim(0.4, len(its) + 0.6)
            ax.set_xticks(pos)
            ax.set_title(f"{s}, Z{d}", fontsize=8)
            if col == 0:
                ax.set_ylabel("runs [%]")
            if row == 1:
                ax.set_xlabel("iteration")
    handles = [Rectangle((0, 0), 1, 1, color=cmap(ci % 10)) for ci in range(m)]
    fig.legend(handles, names, loc="upper right", fontsize=7, frameon=False)
    fig.tight_layout(rect=(0, 0, 0.93, 1))
    fig.savefig(path)
    plt.close(fig)
    return path


def render_report(report: dict, out, clip_zero: bool = False) -> list:
    """Write the component figure to ``out``; with aggregate tables also
    ``<stem>_selection`` and ``<stem>_order`` beside it (same format)."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    written = [plot_components(report, out, clip_zero=clip_zero)]
    if report.get("aggregate"):
        written.append(plot_selection(report, out.with_name(f"{out.stem}_selection{out.suffix}")))
        written.append(plot_order(report, out.with_name(f"{out.stem}_order{out.suffix}")))
    return written
