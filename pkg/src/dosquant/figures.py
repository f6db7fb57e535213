"""Figure rendering for the report path: time responses and threshold curves.

Figures are rendered headlessly to files next to the CSV artifacts they
visualize; the CSV stays the canonical machine-readable output.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import Frontier
from .plantloop import SimTrace

__all__ = ["render_sim_figure", "render_frontier_figure"]


def _attack_spans(attacked) -> list[tuple[int, int]]:
    spans = []
    start = None
    for k, flag in enumerate(attacked):
        if flag and start is None:
            start = k
        elif not flag and start is not None:
            spans.append((start, k))
            start = None
    if start is not None:
        spans.append((start, len(attacked)))
    return spans


def render_sim_figure(trace: SimTrace, path, title: str | None = None) -> None:
    """Two-panel time response: first state component vs estimate, and the bound."""
    fig, (ax_x, ax_e) = plt.subplots(2, 1, figsize=(7.0, 5.4), sharex=True)
    k = trace.k
    for lo, hi in _attack_spans(trace.attacked):
        for ax in (ax_x, ax_e):
            ax.axvspan(lo, hi, color="0.85", zorder=0)
    ax_x.plot(k, trace.x[:, 0], label="$x^1$", color="tab:blue", lw=1.2)
    ax_x.plot(k, trace.x_hat[:, 0], label=r"$\hat x^1$", color="tab:orange", lw=1.0, ls="--")
    if trace.acquisition_time is not None and 0 < trace.acquisition_time < len(trace):
        ax_x.axvline(trace.acquisition_time, color="tab:red", lw=0.8, ls=":")
        ax_e.axvline(trace.acquisition_time, color="tab:red", lw=0.8, ls=":")
    ax_x.set_ylabel("state / estimate")
    ax_x.legend(loc="best", fontsize=9)
    positive = trace.E > 0
    ax_e.semilogy(k[positive], trace.E[positive], color="tab:green", lw=1.2)
    ax_e.set_ylabel("bound $E$")
    ax_e.set_xlabel("step $k$")
    if title:
        ax_x.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_frontier_figure(frontier: Frontier, path, title: str | None = None) -> None:
    """Minimum N against the DoS budget: a curve for one nu_f, else a contour map."""
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    if len(frontier.nu_f) == 1:
        feasible = frontier.min_n[:, 0] >= 0
        ax.semilogy(
            frontier.nu_d[feasible],
            frontier.min_n[feasible, 0],
            "o-",
            ms=4,
            lw=1.0,
            color="tab:blue",
        )
        ax.axvline(frontier.asymptote[0], color="tab:red", lw=0.9, ls="--",
                   label=f"asymptote {frontier.asymptote[0]:.4f}")
        ax.set_xlabel(r"duration bound $\nu_d$")
        ax.set_ylabel("minimum $N$")
        ax.legend(loc="best", fontsize=9)
    else:
        table = np.where(frontier.min_n < 0, np.nan, frontier.min_n).astype(float)
        grid_f, grid_d = np.meshgrid(frontier.nu_f, frontier.nu_d)
        cs = ax.contourf(grid_f, grid_d, np.log10(table), levels=14, cmap="viridis")
        fig.colorbar(cs, ax=ax, label=r"$\log_{10}$ minimum $N$")
        icpt, slope = frontier.asymptote
        span = np.asarray([frontier.nu_f[0], frontier.nu_f[-1]])
        ax.plot(span, icpt + slope * span, color="tab:red", lw=1.0, ls="--",
                label="infinite-$N$ frontier")
        ax.set_xlabel(r"frequency bound $\nu_f$")
        ax.set_ylabel(r"duration bound $\nu_d$")
        ax.legend(loc="best", fontsize=9)
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
