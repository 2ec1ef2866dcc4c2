"""Optional figures. Requires matplotlib (``pip install unimodal[plot]``)."""
from __future__ import annotations

from collections.abc import Sequence


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_sweep(params: Sequence[float], tails: Sequence[Sequence[float]], rows: Sequence[dict],
               path: str) -> None:
    """Bifurcation atlas: tail points against the parameter, colored by verdict."""
    plt = _pyplot()
    colors = {"nonrepelling-periodic": "tab:blue", "transitive-cycle": "tab:orange",
              "solenoid": "tab:green", "indeterminate": "tab:gray"}
    fig, ax = plt.subplots(figsize=(8, 5))
    for a, pts, row in zip(params, tails, rows):
        if pts:
            ax.plot([a] * len(pts), pts, ",", color=colors.get(row["verdict"], "k"))
    for verdict, c in colors.items():
        ax.plot([], [], "s", color=c, label=verdict)
    ax.set_xlabel("parameter")
    ax.set_ylabel("tail points")
    ax.legend(loc="lower left", fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_decay(nus: Sequence[float], path: str, title: str = "") -> None:
    """ν per tower stage on a log scale."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.semilogy(range(len(nus)), nus, "o-")
    ax.set_xlabel("stage")
    ax.set_ylabel("ν")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
