"""ROC figure rendering for the CLI report path.

Writes PNG files next to the delimited output; the library's evaluation
module stays plot-free. Basic curves plot in the default blue, improved
curves in orange.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import EvalReport


def render_roc_figure(
    curves: list[tuple[str, EvalReport]], path: str | Path, title: str = "ROC"
) -> None:
    """Plot one or more ROC curves (label, report) into a single PNG."""
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    for label, report in curves:
        fpr = [p.fpr for p in report.roc]
        tpr = [p.tpr for p in report.roc]
        ax.plot(fpr, tpr, label=f"{label} (AUC {report.auc:.4f})", linewidth=1.5)
    ax.plot([0, 1], [0, 1], color="grey", linestyle="--", linewidth=0.8)
    ax.set_xlabel("False positive rate")
    ax.set_ylabel("True positive rate")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.set_title(title)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
