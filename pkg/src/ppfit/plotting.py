"""Matplotlib figures for fitted curves and Pareto fronts."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_RC = {
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def plot_fit(rows: np.ndarray, path, data=None, title: str | None = None,
             breakpoints=None) -> None:
    """Value, slope and curvature of a fitted curve, data points on top.

    ``rows`` holds ``x, f, f', f''`` columns (see ``dense_sample``).
    """
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(3, 1, figsize=(6, 6.5), sharex=True)
        labels = ("f", "f'", "f''")
        for ax, col, lab in zip(axes, range(1, 4), labels):
            ax.plot(rows[:, 0], rows[:, col], color="C0")
            ax.set_ylabel(lab)
            if breakpoints is not None:
                for b in breakpoints:
                    ax.axvline(b, color="0.8", lw=0.5, zorder=0)
        if data is not None:
            axes[0].scatter(data.x, data.y, s=6, color="C3", zorder=3, label="data")
            axes[0].legend(loc="best", frameon=False)
        axes[-1].set_xlabel("x")
        if title:
            axes[0].set_title(title)
        fig.savefig(path)
        plt.close(fig)


def plot_front(records, front, path) -> None:
    """Energy over approximation error, one colour per alpha; stars mark the front."""
    ok = [r for r in records if getattr(r, "ok", True) and np.isfinite(r.l2)]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 4))
        alphas = sorted({r.alpha for r in ok})
        for c, a in enumerate(alphas):
            pts = sorted((r.l2, r.le) for r in ok if r.alpha == a)
            if pts:
                x, y = zip(*pts)
                ax.plot(x, y, "o-", ms=3, color=f"C{c}", label=f"alpha={a:g}")
        if front:
            ax.scatter([r.l2 for r in front], [r.le for r in front], marker="*",
                       s=90, color="k", zorder=4, label="Pareto optimal")
        positive = all(r.l2 > 0 and r.le > 0 for r in ok)
        if ok and positive:
            ax.set_xscale("log")
            ax.set_yscale("log")
        ax.set_xlabel("approximation loss l2")
        ax.set_ylabel("energy loss lE")
        ax.legend(frameon=False, fontsize=7)
        fig.savefig(path)
        plt.close(fig)
