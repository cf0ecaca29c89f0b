"""Figures for the CLI reports (Agg backend, reproducible SVG output)."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "svg.hashsalt": "diracflat",
    "svg.fonttype": "path",
}


def _save(fig, path) -> Path:
    path = Path(path)
    fmt = path.suffix.lstrip(".") or "svg"
    meta = {"Date": None} if fmt in ("svg", "pdf") else None
    fig.savefig(path, format=fmt, metadata=meta, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_bands(s, curves: dict, ticks: Optional[dict] = None, path="bands.svg", title: str = "") -> Path:
    """Band functions along a momentum path.

    ``curves`` maps a label to an array sampled at the path parameter ``s``;
    ``ticks`` maps path positions to labels.
    """
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 3.6))
        for label, y in curves.items():
            ax.plot(s, y, label=label)
        if ticks:
            ax.set_xticks(list(ticks))
            ax.set_xticklabels(list(ticks.values()))
        ax.set_xlim(s[0], s[-1])
        ax.set_ylabel("energy")
        if title:
            ax.set_title(title)
        ax.legend(loc="best", fontsize=8)
        return _save(fig, path)


def plot_counting(lambdas, counts, prefactor: float, exponent: float, path="counting.svg",
                  fit: Optional[tuple] = None, title: str = "") -> Path:
    """Log-log plot of measured counts against ``prefactor * lambda^(-exponent)``.

    ``fit`` is an optional ``(exponent_hat, prefactor_hat)`` pair.
    """
    lam = np.asarray(lambdas, dtype=float)
    N = np.asarray(counts, dtype=float)
    grid = np.geomspace(lam.min(), lam.max(), 100)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 3.6))
        pos = N > 0
        ax.loglog(lam[pos], N[pos], "o", ms=4, label="measured")
        if prefactor > 0:
            ax.loglog(grid, prefactor * grid ** (-exponent), "-", label=f"prediction {prefactor:.4g} $\\lambda^{{-{exponent:g}}}$")
        if fit is not None:
            e_hat, c_hat = fit
            ax.loglog(grid, c_hat * grid ** (-e_hat), "--", label=f"fit exponent {e_hat:.3f}")
        ax.set_xlabel(r"$\lambda$")
        ax.set_ylabel(r"$N(\lambda)$")
        if title:
            ax.set_title(title)
        ax.legend(loc="best", fontsize=8)
        return _save(fig, path)
