"""Per-class F-scores, change-map rendering, and sweep CSV reports.

Class 1 (changed) is the positive class. Scores are reported on a 0-100
scale; the average F-score (AFS) is the unweighted mean of the two
per-class F-scores.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, LengthMismatch

CSV_HEADER = "strategy,ir,layers,compression,afs,f0,f1"


@dataclass(frozen=True)
class ConfusionCounts:
    """Binary confusion counts with class 1 as positive."""

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class EvaluationReport:
    """One evaluated configuration: scores plus the sweep-row metadata."""

    counts: ConfusionCounts
    f0: float
    f1: float
    afs: float
    strategy: str = ""
    ir: str = ""
    layers: int = 0
    compression: float = 0.0


def confusion(truth, predicted) -> ConfusionCounts:
    """Count tp/fp/tn/fn between two binary label vectors."""
    truth = np.asarray(truth)
    predicted = np.asarray(predicted)
    if truth.shape != predicted.shape:
        raise LengthMismatch(
            f"truth has {truth.size} labels but prediction has {predicted.size}"
        )
    return ConfusionCounts(
        tp=int(np.count_nonzero((truth == 1) & (predicted == 1))),
        fp=int(np.count_nonzero((truth == 0) & (predicted == 1))),
        tn=int(np.count_nonzero((truth == 0) & (predicted == 0))),
        fn=int(np.count_nonzero((truth == 1) & (predicted == 0))),
    )


def _f_score(tp: int, fp: int, fn: int) -> float:
    """Percent F-score from one class's counts; any 0/0 collapses to 0."""
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 100.0 * 2.0 * precision * recall / (precision + recall)


def f_scores(counts: ConfusionCounts) -> tuple[float, float, float]:
    """Per-class F-scores and their unweighted average, each in [0, 100].

    Class 0's score treats unchanged as the positive class, so its true
    positives are the tn count and the false roles of fp/fn swap.
    """
    f1 = _f_score(counts.tp, counts.fp, counts.fn)
    f0 = _f_score(counts.tn, counts.fn, counts.fp)
    return f0, f1, (f0 + f1) / 2.0


def evaluate_labels(
    truth,
    predicted,
    *,
    strategy: str = "",
    ir: str = "",
    layers: int = 0,
    compression: float = 0.0,
) -> EvaluationReport:
    """Confusion counts and F-scores for a truth/prediction pair."""
    counts = confusion(truth, predicted)
    f0, f1, afs = f_scores(counts)
    return EvaluationReport(
        counts=counts,
        f0=f0,
        f1=f1,
        afs=afs,
        strategy=strategy,
        ir=ir,
        layers=layers,
        compression=compression,
    )


def render_change_map(prediction, width: int, height: int) -> np.ndarray:
    """Binary labels as an 8-bit grayscale image: changed white, unchanged black.

    Accepts a Prediction or a flat label vector in row-major pixel order;
    its length must equal width * height.
    """
    labels = np.asarray(getattr(prediction, "labels", prediction))
    if labels.size != width * height:
        raise DimensionMismatch(
            f"{labels.size} labels cannot fill a {width}x{height} image"
        )
    return (labels.reshape(height, width) > 0).astype(np.uint8) * 255


def format_report_row(report: EvaluationReport) -> str:
    """One CSV row: metadata plus scores at two decimal places."""
    return (
        f"{report.strategy},{report.ir},{report.layers},"
        f"{report.compression:.2f},{report.afs:.2f},{report.f0:.2f},{report.f1:.2f}"
    )


def sweep_report(rows: list[EvaluationReport]) -> str:
    """CSV text for a list of reports, one row each, in input order."""
    lines = [CSV_HEADER]
    lines.extend(format_report_row(row) for row in rows)
    return "\n".join(lines) + "\n"
