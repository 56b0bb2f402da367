"""Report emitters: occurrence histogram, day-by-slot timeline, sweep curve.

Figures are written as SVG with a fixed hash salt and no date stamp, so
identical inputs give identical bytes.
"""

from __future__ import annotations

import csv
from typing import TextIO

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from .miner import PatternSet  # noqa: E402
from .model import NodeGrid  # noqa: E402

# fixed palette, pattern id -> PALETTE[id % len(PALETTE)]
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)

_RC = {
    "svg.hashsalt": "routine-miner",
    "svg.fonttype": "none",
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def pattern_colour(pid: int) -> str:
    return PALETTE[pid % len(PALETTE)]


def _save(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def occurrence_counts(ps: PatternSet) -> list[tuple[int, int, int]]:
    """(pattern id, days of occurrence, node count) per pattern."""
    return [(p.id, len(p.days), len(p.nodes)) for p in ps.patterns]


def write_histogram_csv(ps: PatternSet, fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["pattern_id", "days", "nodes"])
    for row in occurrence_counts(ps):
        w.writerow(row)


def histogram_svg(ps: PatternSet, path) -> None:
    counts = occurrence_counts(ps)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 3))
        for pid, days, _ in counts:
            ax.bar(pid, days, color=pattern_colour(pid), width=0.8, gid=f"bar-{pid}")
        ax.set_xticks([pid for pid, _, _ in counts])
        ax.set_xlabel("pattern")
        ax.set_ylabel("days of occurrence")
        fig.tight_layout()
        _save(fig, path)


def timeline_svg(ps: PatternSet, grid: NodeGrid, path) -> None:
    """Days as rows, slots as columns; a cell is filled with its pattern's
    colour, unassigned and unrecorded cells stay blank."""
    spd = grid.slots_per_day
    n_days = max(grid.n_days, 1)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(max(4.0, spd * 0.14), max(1.5, n_days * 0.25 + 0.8)))
        for p in sorted(ps.patterns, key=lambda p: p.id):
            colour = pattern_colour(p.id)
            for i, j in p.sorted_nodes():
                ax.add_patch(Rectangle((j, i), 1, 1, facecolor=colour, edgecolor="white",
                                       linewidth=0.3, gid=f"cell-{i}-{j}-p{p.id}"))
        ax.set_xlim(0, spd)
        ax.set_ylim(n_days, 0)
        hours = range(0, spd + 1, max(spd // 12, 1))
        ax.set_xticks(list(hours))
        ax.set_xticklabels([f"{h * grid.slot_minutes // 60:02d}h" for h in hours])
        ax.set_yticks([i + 0.5 for i in range(grid.n_days)])
        ax.set_yticklabels([d.isoformat() for d in grid.days])
        ax.set_xlabel("time of day")
        fig.tight_layout()
        _save(fig, path)


def sweep_svg(table, path, best_T: float | None = None) -> None:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 3))
        ax.plot([t for t, _ in table], [s for _, s in table], marker="o", markersize=3, color=PALETTE[0])
        if best_T is not None:
            ax.axvline(best_T, color=PALETTE[3], linestyle="--", linewidth=1)
        ax.set_xlabel("threshold T")
        ax.set_ylabel("sc")
        fig.tight_layout()
        _save(fig, path)
