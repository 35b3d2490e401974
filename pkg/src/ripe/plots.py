"""Optional PNG renderings of the cutoff scan and the random-graph null."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .influence import ScanRow  # noqa: E402


def plot_scan(rows: Sequence[ScanRow], path) -> Path:
    """Edge count and largest component sizes against the cutoff (log x axis)."""
    cut = [r.cutoff for r in rows]
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    ax.plot(cut, [r.edges for r in rows], "o-", ms=3, label="edges")
    ax.plot(cut, [r.largest_scc for r in rows], "s-", ms=3, label="largest SCC")
    ax.plot(cut, [r.largest_wcc for r in rows], "^-", ms=3, label="largest WCC")
    ax.set_xscale("log")
    ax.set_xlabel("p-value cutoff")
    ax.set_ylabel("count")
    ax.legend(frameon=False)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_null(hist: Sequence[tuple[int, int]], observed: int, path) -> Path:
    """Bar chart of null true-positive counts with the observed count marked."""
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    if hist:
        xs, ys = zip(*hist)
        ax.bar(xs, ys, width=0.9, color="0.6")
    ax.axvline(observed, color="C3", lw=2, label=f"observed TP = {observed}")
    ax.set_xlabel("true positives in random graph")
    ax.set_ylabel("trials")
    ax.legend(frameon=False)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path
