"""Precision / recall / F1 report over the two route classes."""

from collections.abc import Sequence

import numpy as np

from crossroad.errors import InvalidInputError
from crossroad.models import ROUTES, ClassMetrics, Report, Route


def _ratio(numerator: float, denominator: float) -> float:
    """Divide, returning 0.0 for a zero denominator."""
    return numerator / denominator if denominator else 0.0


def _f1(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall (0.0 when both are 0)."""
    return _ratio(2.0 * precision * recall, precision + recall)


def confusion_counts(
    predictions: Sequence[Route], truths: Sequence[Route]
) -> dict[Route, tuple[int, int, int]]:
    """Return (TP, FP, FN) per route.

    Raises:
        InvalidInputError: If the sequences differ in length or are empty.
    """
    if len(predictions) != len(truths):
        raise InvalidInputError(
            f"{len(predictions)} predictions but {len(truths)} ground-truth labels"
        )
    if not truths:
        raise InvalidInputError("Cannot evaluate an empty prediction set")
    predicted = np.array([p.value for p in predictions])
    actual = np.array([t.value for t in truths])
    counts = {}
    for route in ROUTES:
        is_pred = predicted == route.value
        is_true = actual == route.value
        counts[route] = (
            int(np.count_nonzero(is_pred & is_true)),
            int(np.count_nonzero(is_pred & ~is_true)),
            int(np.count_nonzero(~is_pred & is_true)),
        )
    return counts


def evaluate(predictions: Sequence[Route], truths: Sequence[Route]) -> Report:
    """Build the per-class and averaged precision/recall/F1 report.

    Precision is 0 when nothing was predicted for a class, and F1 is 0
    when precision + recall is 0. Micro averages pool TP/FP/FN; macro
    averages are unweighted class means; weighted averages use supports.

    Raises:
        InvalidInputError: If the sequences differ in length or are empty.
    """
    counts = confusion_counts(predictions, truths)
    per_class: dict[Route, ClassMetrics] = {}
    for route in ROUTES:
        tp, fp, fn = counts[route]
        precision = _ratio(tp, tp + fp)
        recall = _ratio(tp, tp + fn)
        per_class[route] = ClassMetrics(
            precision=precision,
            recall=recall,
            f1=_f1(precision, recall),
            support=tp + fn,
        )

    total = len(truths)
    tp = sum(c[0] for c in counts.values())
    fp = sum(c[1] for c in counts.values())
    fn = sum(c[2] for c in counts.values())
    micro_p = _ratio(tp, tp + fp)
    micro_r = _ratio(tp, tp + fn)
    micro = ClassMetrics(micro_p, micro_r, _f1(micro_p, micro_r), total)

    rows = [per_class[route] for route in ROUTES]
    macro = ClassMetrics(
        precision=sum(m.precision for m in rows) / len(rows),
        recall=sum(m.recall for m in rows) / len(rows),
        f1=sum(m.f1 for m in rows) / len(rows),
        support=total,
    )
    weighted = ClassMetrics(
        precision=sum(m.precision * m.support for m in rows) / total,
        recall=sum(m.recall * m.support for m in rows) / total,
        f1=sum(m.f1 * m.support for m in rows) / total,
        support=total,
    )
    return Report(per_class=per_class, micro=micro, macro=macro, weighted=weighted)
