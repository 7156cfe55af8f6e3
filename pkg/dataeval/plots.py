"""
SVG plots
Confusion heatmap with per-cell row percentages, and training-history curves.
Text stays as <text> elements and ids are salted with a constant so reruns are byte-identical.
"""
from pathlib import Path
from typing import Dict, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from config.logging import get_logger  # noqa: E402
from dataeval.metrics import ConfusionMatrix  # noqa: E402

logger = get_logger(__name__)

SVG_STYLE = {"svg.fonttype": "none", "svg.hashsalt": "mfpnet"}


def _save_svg(fig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_confusion(cm: ConfusionMatrix, path: Union[str, Path], title: str = "Confusion matrix") -> Path:
    percentages = cm.row_percentages()
    k = len(cm.classes)
    with plt.rc_context(SVG_STYLE):
        fig, ax = plt.subplots(figsize=(1.0 + 0.8 * k, 1.0 + 0.7 * k))
        ax.matshow(percentages, cmap=plt.cm.Blues, vmin=0.0, vmax=100.0)
        for i in range(k):
            for j in range(k):
                color = "white" if percentages[i, j] > 60 else "black"
                ax.text(j, i, f"{percentages[i, j]:.1f}%", ha="center", va="center", fontsize=7, color=color)
        ax.set_xticks(np.arange(k), labels=cm.classes, rotation=45, fontsize=8)
        ax.set_yticks(np.arange(k), labels=cm.classes, fontsize=8)
        ax.set_xlabel("predicted label")
        ax.set_ylabel("true label")
        ax.set_title(f"{title} (accuracy {100 * cm.accuracy:.2f}%)", fontsize=9)
        fig.tight_layout()
        out = _save_svg(fig, path)
    logger.info("plot_written", kind="confusion", path=str(out))
    return out


def plot_history(history: Sequence[Dict[str, float]], path: Union[str, Path],
                 x_key: str = "epoch", title: str = "Training history") -> Path:
    """One line per numeric column other than x_key"""
    keys = [k for k in (history[0] if history else {}) if k != x_key]
    xs = [row[x_key] for row in history]
    with plt.rc_context(SVG_STYLE):
        fig, ax = plt.subplots(figsize=(6, 4))
        for key in keys:
            ax.plot(xs, [row[key] for row in history], label=key)
        ax.set_xlabel(x_key)
        ax.set_title(title, fontsize=9)
        if keys:
            ax.legend(fontsize=8)
        fig.tight_layout()
        out = _save_svg(fig, path)
    logger.info("plot_written", kind="history", path=str(out))
    return out
