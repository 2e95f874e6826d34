"""Report figures rendered to files (headless backend)."""

from __future__ import annotations

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import EvalReport

logger = logging.getLogger(__name__)


def save_pattern_histogram(counts: dict[str, int], path: str | Path) -> Path:
    """Bar chart of causal-pattern counts."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(counts)
    values = [counts[name] for name in names]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(names, values, color="#4878a8")
    ax.set_ylabel("samples")
    ax.set_title("Causal pattern distribution")
    for i, value in enumerate(values):
        ax.text(i, value, str(value), ha="center", va="bottom", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.info("wrote %s", path)
    return path


def save_eval_figure(report: EvalReport, path: str | Path) -> Path:
    """Metric bars plus a confusion-count summary."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    metrics = ["Precision", "Recall", "F1"]
    values = [report.precision * 100, report.recall * 100, report.f1 * 100]
    ax.bar(metrics, values, color=["#4878a8", "#6aa84f", "#b45f06"])
    ax.set_ylim(0, 100)
    ax.set_ylabel("percent")
    for i, value in enumerate(values):
        ax.text(i, value, f"{value:.1f}", ha="center", va="bottom", fontsize=9)
    confusion = report.confusion
    ax.set_title(f"tp={confusion.tp} fp={confusion.fp} fn={confusion.fn} tn={confusion.tn}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.info("wrote %s", path)
    return path
