"""Training curves and a plain-text metrics summary."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .classifier import EpochStats  # noqa: E402
from .metrics import MetricsReport  # noqa: E402


def plot_history(history: Sequence[EpochStats], out_dir: str | Path) -> list[Path]:
    """Write ``loss.png`` and ``accuracy.png``: train and val curves per epoch."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    epochs = [h.epoch for h in history]
    written = []
    for name, train_key, val_key in (
        ("loss", "train_loss", "val_loss"),
        ("accuracy", "train_acc", "val_acc"),
    ):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.plot(epochs, [getattr(h, train_key) for h in history], "o-", label="train")
        ax.plot(epochs, [getattr(h, val_key) for h in history], "s--", label="validation")
        ax.set_xlabel("epoch")
        ax.set_ylabel(name)
        ax.legend()
        fig.tight_layout()
        path = out_dir / f"{name}.png"
        fig.savefig(path, dpi=100)
        plt.close(fig)
        written.append(path)
    return written


def _f(value, width=10) -> str:
    return f"{'n/a':>{width}}" if value is None else f"{value:>{width}.4f}"


def summary_text(report: MetricsReport) -> str:
    names = report.class_names
    total = sum(report.support)
    label_w = max(16, *(len(n) + 2 for n in names))
    lines = [
        f"{'class':<{label_w}}{'precision':>10}{'recall':>10}{'f1-score':>10}{'support':>10}",
    ]
    for i, name in enumerate(names):
        lines.append(
            f"{name:<{label_w}}{_f(report.precision[i])}{_f(report.recall[i])}"
            f"{_f(report.f1[i])}{report.support[i]:>10d}"
        )
    lines.append(f"{'accuracy':<{label_w}}{'':>20}{_f(report.accuracy)}{total:>10d}")
    for label, avg in (("macro avg", report.macro_avg), ("weighted avg", report.weighted_avg)):
        lines.append(
            f"{label:<{label_w}}{_f(avg['precision'])}{_f(avg['recall'])}{_f(avg['f1'])}{total:>10d}"
        )
    lines.append("")
    col_w = max(14, *(len(n) + 2 for n in names))
    lines.append(f"{'parameter':<{label_w}}" + "".join(f"{n:>{col_w}}" for n in names) + f"{'average':>{col_w}}")
    lines.append(
        f"{'class accuracy':<{label_w}}"
        + "".join(_f(v, col_w) for v in report.class_accuracy)
        + " " * col_w
    )
    lines.append(f"{'acsa':<{label_w}}" + " " * (col_w * len(names)) + _f(report.acsa, col_w))
    lines.append(f"{'ppv':<{label_w}}" + "".join(_f(v, col_w) for v in report.ppv) + " " * col_w)
    lines.append("")
    lines.append(f"accuracy {_f(report.accuracy, 0)}")
    lines.append(f"acsa {_f(report.acsa, 0)}")
    lines.append("confusion matrix (rows true, columns predicted):")
    for name, row in zip(names, report.confusion_matrix):
        lines.append(f"  {name:<{label_w}}" + "".join(f"{v:>8d}" for v in row))
    return "\n".join(line.rstrip() for line in lines) + "\n"


def write_summary(report: MetricsReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(summary_text(report))
    return path
