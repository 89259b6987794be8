"""Confusion-matrix metrics: per-class accuracy, ACSA, PPV and the usual
precision/recall/F1 report.

Rows of the confusion matrix are true classes, columns are predictions.
A rate whose denominator is zero is reported as ``None`` and left out of the
macro and weighted averages.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, InputError

REPORT_KEYS = (
    "class_names",
    "confusion_matrix",
    "accuracy",
    "class_accuracy",
    "acsa",
    "ppv",
    "precision",
    "recall",
    "f1",
    "support",
    "macro_avg",
    "weighted_avg",
)

Rate = float | None


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    counts: np.ndarray
    class_names: tuple[str, ...]

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise InputError(f"confusion matrix must be square, got shape {counts.shape}")
        if counts.shape[0] < 2:
            raise InputError("confusion matrix needs at least two classes")
        if np.any(counts < 0) or not np.all(np.equal(np.mod(counts, 1), 0)):
            raise InputError("confusion matrix entries must be non-negative integers")
        if len(self.class_names) != counts.shape[0]:
            raise InputError("class_names length does not match the matrix")
        object.__setattr__(self, "counts", counts.astype(np.int64))
        object.__setattr__(self, "class_names", tuple(self.class_names))

    def __eq__(self, other):
        if not isinstance(other, ConfusionMatrix):
            return NotImplemented
        return self.class_names == other.class_names and np.array_equal(self.counts, other.counts)


@dataclass
class MetricsReport:
    class_names: list[str]
    confusion_matrix: list[list[int]]
    accuracy: float
    class_accuracy: list[Rate]
    acsa: Rate
    ppv: list[Rate]
    precision: list[Rate]
    recall: list[Rate]
    f1: list[Rate]
    support: list[int]
    macro_avg: dict[str, Rate]
    weighted_avg: dict[str, Rate]

    def to_dict(self) -> dict:
        return {key: getattr(self, key) for key in REPORT_KEYS}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsReport":
        missing = set(REPORT_KEYS) - set(data)
        if missing:
            raise InputError(f"report is missing keys: {sorted(missing)}")
        return cls(**{key: data[key] for key in REPORT_KEYS})


def confusion(
    true_labels: Sequence[str], predicted_labels: Sequence[str], class_names: Sequence[str]
) -> ConfusionMatrix:
    if len(true_labels) != len(predicted_labels):
        raise InputError(
            f"label sequences differ in length: {len(true_labels)} vs {len(predicted_labels)}"
        )
    if not true_labels:
        raise InputError("no labels given")
    index = {name: i for i, name in enumerate(class_names)}
    counts = np.zeros((len(class_names), len(class_names)), dtype=np.int64)
    for t, p in zip(true_labels, predicted_labels):
        if t not in index or p not in index:
            raise InputError(f"label outside class_names: {t!r} / {p!r}")
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(counts, tuple(class_names))


def _ratio(num: int, den: int) -> Rate:
    return None if den == 0 else num / den


def _mean(values: Sequence[Rate]) -> Rate:
    defined = [v for v in values if v is not None]
    return sum(defined) / len(defined) if defined else None


def _weighted(values: Sequence[Rate], weights: Sequence[int]) -> Rate:
    pairs = [(v, w) for v, w in zip(values, weights) if v is not None]
    total = sum(w for _, w in pairs)
    return sum(v * w for v, w in pairs) / total if total else None


def _f1(p: Rate, r: Rate) -> Rate:
    if p is None or r is None:
        return None
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def compute_metrics(cm: ConfusionMatrix) -> MetricsReport:
    counts = cm.counts
    n = counts.shape[0]
    diag = [int(counts[i, i]) for i in range(n)]
    row_sums = [int(v) for v in counts.sum(axis=1)]
    col_sums = [int(v) for v in counts.sum(axis=0)]
    total = int(counts.sum())
    if total == 0:
        raise DataError("confusion matrix is empty")

    class_accuracy = [_ratio(diag[i], row_sums[i]) for i in range(n)]
    ppv = [_ratio(diag[i], col_sums[i]) for i in range(n)]
    f1 = [_f1(p, r) for p, r in zip(ppv, class_accuracy)]
    acsa = _mean(class_accuracy)

    return MetricsReport(
        class_names=list(cm.class_names),
        confusion_matrix=counts.tolist(),
        accuracy=sum(diag) / total,
        class_accuracy=class_accuracy,
        acsa=acsa,
        ppv=ppv,
        precision=list(ppv),
        recall=list(class_accuracy),
        f1=f1,
        support=row_sums,
        macro_avg={
            "precision": _mean(ppv),
            "recall": acsa,
            "f1": _mean(f1),
        },
        weighted_avg={
            "precision": _weighted(ppv, row_sums),
            "recall": _weighted(class_accuracy, row_sums),
            "f1": _weighted(f1, row_sums),
        },
    )


def write_report(report: MetricsReport, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.to_json() + "\n")


def read_report(path: str | Path) -> MetricsReport:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not a metrics report ({exc})") from None
    return MetricsReport.from_dict(data)


def evaluate(model, manifest, split: str = "test", report_path: str | Path | None = None):
    """Predict every record of ``split`` and score the predictions."""
    from .classifier import predict_paths

    records = [r for r in manifest.records if r.split == split]
    if not records:
        raise DataError(f"split {split!r} is empty")
    probs = predict_paths(model, [r.path for r in records])
    names = list(model.class_names)
    predicted = [names[int(np.argmax(p))] for p in probs]
    cm = confusion([r.label for r in records], predicted, names)
    report = compute_metrics(cm)
    if report_path is not None:
        write_report(report, report_path)
    return cm, report
