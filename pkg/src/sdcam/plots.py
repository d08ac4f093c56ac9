"""Figure rendering for the benchmark report paths.

All functions write PNG files next to the delimited output and are safe
headless (the Agg backend is forced before pyplot is imported).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_moreau_figure", "render_fused_recovery", "render_slr_convergence"]


def render_moreau_figure(rows, path) -> None:
    """Plot |x|^{1/2} against its envelope and the smooth surrogate."""
    x = [r["x"] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(x, [r["f"] for r in rows], label=r"$|x|^{1/2}$", lw=1.5)
    ax.plot(x, [r["envelope"] for r in rows], label="Moreau envelope", lw=1.5)
    ax.plot(x, [r["smoothing"] for r in rows], label=r"$(x^2+\lambda^2)^{1/4}$", lw=1.5, ls="--")
    ax.set_xlabel("x")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_fused_recovery(x_true, b, recovered: dict, path) -> None:
    """Overlay the noisy data, ground truth and each solver's recovery."""
    n = len(x_true)
    idx = np.arange(n)
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(idx, b, color="0.8", lw=0.5, label="data")
    ax.plot(idx, x_true, color="k", lw=1.2, label="truth")
    for name, x in recovered.items():
        ax.plot(idx, x, lw=1.0, alpha=0.9, label=name)
    ax.set_xlabel("index")
    ax.set_ylabel("value")
    ax.legend(frameon=False, ncol=2, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_slr_convergence(traces: dict, path) -> None:
    """Per-stage distance to the smoothed constraint, per solver."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, pairs in traces.items():
        stages = np.arange(len(pairs))
        dist = [max(d, 1e-300) for _lam, d in pairs]
        ax.semilogy(stages, dist, marker="o", ms=3, label=name)
    ax.set_xlabel("smoothing stage")
    ax.set_ylabel("constraint distance")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
