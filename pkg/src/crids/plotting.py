"""Figures written next to the delimited reports."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# Fixed metadata keeps repeated renders byte-stable.
_PNG_META = {"Software": None}

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}


def _save(fig, path: Path) -> Path:
    path = Path(path)
    fig.savefig(path, metadata=_PNG_META, bbox_inches="tight")
    plt.close(fig)
    return path


def index_histogram(indices: Sequence[float], path, bins: int = 10, thresholds=(0.1, 0.5)) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.0))
        ax.hist(list(indices), bins=bins, range=(0.0, 1.0), color="0.55", edgecolor="white")
        for t in thresholds:
            ax.axvline(t, color="tab:red", lw=0.8, ls="--")
        ax.set_xlim(0, 1)
        ax.set_xlabel("resilience index")
        ax.set_ylabel("sites")
        return _save(fig, path)


def threshold_maps(xs, ys, indices, path, thresholds=(0.1, 0.5)) -> Path:
    """One panel per threshold; sites below it in red."""
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, len(thresholds), figsize=(4.0 * len(thresholds), 3.6), squeeze=False)
        for ax, t in zip(axes[0], thresholds):
            low = [v < t for v in indices]
            ax.scatter([x for x, b in zip(xs, low) if not b], [y for y, b in zip(ys, low) if not b],
                       s=3, c="0.7", linewidths=0, label=f"index >= {t:g}")
            ax.scatter([x for x, b in zip(xs, low) if b], [y for y, b in zip(ys, low) if b],
                       s=4, c="tab:red", linewidths=0, label=f"index < {t:g}")
            ax.set_aspect("equal", adjustable="datalim")
            ax.set_title(f"below {t:g}: {sum(low)} of {len(low)}")
            ax.set_xticks([])
            ax.set_yticks([])
            ax.legend(loc="upper center", bbox_to_anchor=(0.5, 0.0), ncol=2, frameon=False, markerscale=3)
        return _save(fig, path)


def frontier_plot(costs: Sequence[float], totals: Sequence[float], path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.0))
        ax.step(list(costs), list(totals), where="post", color="0.4", lw=0.8)
        if len(costs) <= 60:
            ax.plot(list(costs), list(totals), "o", ms=3, color="tab:blue")
        ax.set_xlabel("total cost")
        ax.set_ylabel("summed resilience index")
        return _save(fig, path)
