"""Matplotlib rendering of the comparison report figures."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finite(values) -> list[float]:
    return [v for v in values if np.isfinite(v)]


def fitness_boxplot(train: dict[str, list[float]], test: dict[str, list[float]],
                    title: str, path) -> None:
    """Side-by-side train/test fitness distributions per method."""
    methods = list(test.keys())
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6), sharey=False)
    for ax, samples, label in ((axes[0], train, "training"), (axes[1], test, "test")):
        data = [_finite(samples.get(m, [])) or [0.0] for m in methods]
        ax.boxplot(data, tick_labels=methods)
        ax.axhline(0.0, color="gray", linewidth=0.8, linestyle="--")
        ax.set_title(f"{title} ({label})")
        ax.set_ylabel("fitness")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def cd_diagram(methods: list[str], ranks: list[float], cd: float, title: str, path) -> None:
    """Critical-difference diagram: methods on a 1..k rank axis, bars joining
    groups whose mean ranks differ by less than the critical distance."""
    k = len(methods)
    order = sorted(range(k), key=lambda i: ranks[i])
    fig, ax = plt.subplots(figsize=(7, 2.2 + 0.4 * k))
    ax.set_xlim(0.8, k + 0.2)
    ax.set_ylim(-0.5 - k * 0.6, 1.6)
    ax.spines[["left", "right", "bottom"]].set_visible(False)
    ax.get_yaxis().set_visible(False)
    ax.xaxis.set_ticks_position("top")
    ax.set_xticks(range(1, k + 1))
    ax.plot([1, k], [1, 1], color="black", linewidth=1.2)
    for x in range(1, k + 1):
        ax.plot([x, x], [1, 1.1], color="black", linewidth=1.2)

    half = (k + 1) // 2
    for pos, idx in enumerate(order):
        rank = ranks[idx]
        if pos < half:
            y = -0.1 - pos * 0.55
            x_label = 0.85
            align = "right"
        else:
            y = -0.1 - (k - 1 - pos) * 0.55
            x_label = k + 0.15
            align = "left"
        ax.plot([rank, rank], [1, y], color="C0", linewidth=1.0)
        ax.plot([rank, x_label], [y, y], color="C0", linewidth=1.0)
        ax.text(x_label, y, f" {methods[idx]} ({rank:.2f}) ",
                va="center", ha=align, fontsize=9)

    # Group bars just under the axis.
    level = 0.88
    drawn: list[tuple[float, float]] = []
    lo = 0
    while lo < k:
        hi = lo
        while hi + 1 < k and ranks[order[hi + 1]] - ranks[order[lo]] <= cd:
            hi += 1
        if hi > lo:
            span = (ranks[order[lo]], ranks[order[hi]])
            if span not in drawn:
                ax.plot(span, [level, level], color="black", linewidth=3.0,
                        solid_capstyle="round")
                drawn.append(span)
                level -= 0.07
        lo += 1
    ax.text(1.0, 1.45, f"{title}   CD = {cd:.3f}", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
