"""Matplotlib report figures written next to the delimited outputs."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .grid import FeasibilityGrid  # noqa: E402

# fixed metadata keeps PNG bytes stable across runs
_META = {"Software": None}


def plot_grids(grids: Sequence[FeasibilityGrid], path, truth: FeasibilityGrid | None = None) -> Path:
    """Side-by-side panels of relaxed feasible cells, the exact set overlaid darker."""
    n = len(grids)
    fig, axes = plt.subplots(1, n, figsize=(3.2 * n, 3.2), squeeze=False)
    for ax, g in zip(axes[0], grids):
        img = g.flags.astype(float) * 0.35
        if truth is not None:
            img = np.where(truth.flags, 1.0, img)
        (li, ui), (lj, uj) = g.ranges
        ax.imshow(img, origin="lower", extent=(li, ui, lj, uj), cmap="Greys", vmin=0.0, vmax=1.0,
                  interpolation="nearest")
        ax.set_title(g.label, fontsize=9)
        ax.set_xlabel(g.names[0])
        ax.set_ylabel(g.names[1])
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=100, metadata=_META)
    plt.close(fig)
    return out


def plot_compare(rows: Sequence[dict], path) -> Path:
    """Relaxation value and node count per formulation of a sweep."""
    labels = [f"{r['formulation']}\nP={r['P']}" for r in rows]
    relax = [float(r["relax_value"]) if r["relax_value"] != "" else np.nan for r in rows]
    nodes = [float(r["nodes"]) if r["nodes"] != "" else np.nan for r in rows]
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(8, 3.2))
    x = np.arange(len(rows))
    a1.plot(x, relax, "o-", color="black")
    a1.set_xticks(x, labels, fontsize=7)
    a1.set_ylabel("relaxation value")
    a2.bar(x, nodes, color="0.5")
    a2.set_xticks(x, labels, fontsize=7)
    a2.set_ylabel("nodes")
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=100, metadata=_META)
    plt.close(fig)
    return out
