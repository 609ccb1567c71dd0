"""Figures for evaluation reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .evalkit import _condition_order  # noqa: E402

COLORS = {"control": "#1f77b4", "experimental": "#d62728", "random": "#7f7f7f"}


def plot_report(report, path, title=None, dpi=150):
    """Per-subject mean distance to control with its interval, one column per condition."""
    groups = report.by_condition()
    order = _condition_order(groups)
    fig, ax = plt.subplots(figsize=(2.2 * len(order) + 1.5, 4.5))
    x0 = 0
    ticks, labels = [], []
    for cond in order:
        rows = groups[cond]
        xs = [x0 + i for i in range(len(rows))]
        means = [r.mean for r in rows]
        err = [[r.mean - r.lo for r in rows], [r.hi - r.mean for r in rows]]
        ax.errorbar(xs, means, yerr=err, fmt="o", capsize=3, color=COLORS.get(cond, "k"), label=cond)
        ticks.append(x0 + (len(rows) - 1) / 2)
        labels.append(f"{cond}\n(n={len(rows)})")
        x0 += len(rows) + 2
    ax.set_xticks(ticks)
    ax.set_xticklabels(labels)
    ax.set_ylim(0, 2)
    ax.set_ylabel("mean distance to control group")
    ax.set_title(title or f"Distance to control, {report.level:g}% bootstrap CI")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    return path
