"""Figures for experiment reports, rendered off-screen to PNG."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def entropy_levels_figure(levels, entropies, slope: float, intercept: float, window: tuple[int, int], path) -> None:
    levels = np.asarray(levels)
    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.plot(levels, entropies, "o", ms=3, label="H(sample, D_k)")
    lo, hi = window
    k = np.array([lo, hi])
    ax.plot(k, slope * k + intercept, "-", label=f"fit, slope {slope:.3f}")
    ax.axvspan(lo, hi, color="0.9", zorder=0)
    ax.set_xlabel("level k")
    ax.set_ylabel("entropy (bits)")
    ax.legend(loc="upper left", fontsize=8)
    _save(fig, path)


def local_dims_figure(edges, counts, mean: float, path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.stairs(counts, edges, fill=True, alpha=0.6)
    ax.axvline(mean, color="k", lw=1, label=f"mean {mean:.3f}")
    ax.set_xlabel("fitted local dimension")
    ax.set_ylabel("probes")
    ax.legend(fontsize=8)
    _save(fig, path)


def scan_figure(lambdas, measured, formula, path, xlabel: str = "lambda") -> None:
    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.plot(lambdas, measured, "o-", label="entropy slope")
    ax.plot(lambdas, formula, "s--", label="min(1, h / 2 chi)")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("dimension")
    ax.legend(fontsize=8)
    _save(fig, path)
