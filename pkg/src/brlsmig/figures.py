"""Matplotlib figure rendering for the report path.

Every imaging command saves a publication-style figure of its output next
to the binary grid and the key=value report.  Rendering is file-only (Agg
backend); nothing here opens a window.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["save_grid_figure", "save_iterations_figure"]


def save_grid_figure(
    values,
    d1: float,
    d2: float,
    path,
    title: str = "",
    clip_percentile: float = 98.0,
    cmap: str = "gray",
    symmetric: bool = True,
) -> None:
    """Save a grid as an image figure with physical axes in meters.

    ``symmetric=True`` clips to +/- the given percentile of |values|
    (reflectivity-style plots); otherwise the raw value range is used
    (velocity-style plots).
    """
    v = np.asarray(values, dtype=np.float64)
    n1, n2 = v.shape
    if symmetric:
        c = float(np.percentile(np.abs(v), clip_percentile))
        vmin, vmax = (-c, c) if c > 0 else (-1.0, 1.0)
    else:
        vmin, vmax = float(v.min()), float(v.max())
        if vmin == vmax:
            vmin, vmax = vmin - 1.0, vmax + 1.0

    fig, ax = plt.subplots(figsize=(7.0, 3.5))
    im = ax.imshow(
        v,
        cmap=cmap,
        vmin=vmin,
        vmax=vmax,
        extent=(0.0, n2 * d2, n1 * d1, 0.0),
        aspect="auto",
        interpolation="nearest",
    )
    ax.set_xlabel("lateral position (m)")
    ax.set_ylabel("depth (m)")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, shrink=0.9, pad=0.02)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_iterations_figure(counts, path, title: str = "CG iterations per window") -> None:
    """Bar chart of per-window solver iteration counts."""
    counts = list(counts)
    fig, ax = plt.subplots(figsize=(7.0, 2.8))
    ax.bar(range(len(counts)), counts, color="0.35")
    ax.set_xlabel("window")
    ax.set_ylabel("iterations")
    ax.set_title(title)
    ax.set_xticks(range(0, max(len(counts), 1), max(1, len(counts) // 12)))
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
