"""Confusion matrices and segmentation metrics with Void exclusion.

Pixels whose ground truth is Void carry no supervision and are dropped
before counting. Rows are ground truth, columns are predictions. Counts
are integers, so accumulating per-frame matrices in any order gives
bit-identical totals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, EmptyEvaluationError

__all__ = [
    "ConfusionMatrix",
    "MetricReport",
    "MERGE_MODES",
    "merge_groups",
    "confusion",
    "accumulate_confusion",
    "iou_report",
    "merge_report_classes",
    "mean_metric",
]

# class-merge modes: groups of merged-class ids (1=Ground, 2=Bushes, 3=Obstacles)
MERGE_MODES = {
    "cls3": ((1,), (2,), (3,)),
    "cls2-1": ((1,), (2, 3)),
    "cls2-2": ((1, 2), (3,)),
}

_GROUP_BASE_NAMES = {1: "Ground", 2: "Bushes", 3: "Obstacles"}


def merge_groups(mode: str):
    if mode not in MERGE_MODES:
        raise ConfigError(
            f"unknown merge mode {mode!r}; expected one of {', '.join(MERGE_MODES)}"
        )
    return MERGE_MODES[mode]


def _group_name(group) -> str:
    ordered = sorted(group)
    if ordered == [2, 3]:
        # match the reporting order used for the two-class groupings
        ordered = [3, 2]
    return "+".join(_GROUP_BASE_NAMES[g] for g in ordered)


@dataclass
class ConfusionMatrix:
    """counts[gt_class, predicted_class] over evaluated (non-Void-GT) pixels."""

    counts: np.ndarray
    class_names: tuple

    def __post_init__(self) -> None:
        self.counts = np.asarray(self.counts, dtype=np.uint64)
        self.class_names = tuple(self.class_names)
        k = len(self.class_names)
        if self.counts.shape != (k, k):
            raise ConfigError(
                f"counts shape {self.counts.shape} does not match {k} classes"
            )

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass
class MetricReport:
    per_class_iou: tuple
    per_class_accuracy: tuple
    miou: float
    macc: float
    class_names: tuple
    evaluated_pixels: int


def confusion(pred, gt, merge: str = "cls3", allow_pred_void: bool = False) -> ConfusionMatrix:
    """Count prediction-vs-truth pairs after applying the class merge.

    Ground-truth Void pixels are excluded. A Void prediction over a labeled
    pixel is an error unless allow_pred_void, which adds a 'rejected' column.
    """
    if pred.classes.shape != gt.classes.shape:
        raise DataError(
            f"geometry mismatch: pred {pred.classes.shape} vs gt {gt.classes.shape}"
        )
    if (
        pred.meters_per_pixel != gt.meters_per_pixel
        or tuple(pred.center_pixel) != tuple(gt.center_pixel)
    ):
        raise DataError("geometry mismatch: images differ in scale or center")
    groups = merge_groups(merge)
    k = len(groups)
    lut = np.full(4, -1, dtype=np.int64)
    for gi, group in enumerate(groups):
        for cid in group:
            lut[cid] = gi
    mask = gt.classes != 0
    gt_m = lut[gt.classes[mask].astype(np.int64)]
    pr_m = lut[pred.classes[mask].astype(np.int64)]
    if np.any(gt_m < 0):
        bad = int(gt.classes[mask][gt_m < 0][0])
        raise DataError(f"ground-truth class {bad} is outside merge mode {merge!r}")
    names = tuple(_group_name(g) for g in groups)
    void_pred = pr_m < 0
    if np.any(void_pred):
        if not allow_pred_void:
            raise DataError(
                "prediction contains Void over labeled pixels; "
                "pass allow_pred_void to count them as rejected"
            )
        names = names + ("rejected",)
        pr_m = np.where(void_pred, k, pr_m)
        counts = np.bincount(gt_m * (k + 1) + pr_m, minlength=k * (k + 1)).reshape(k, k + 1)
        square = np.zeros((k + 1, k + 1), dtype=np.uint64)
        square[:k, :] = counts.astype(np.uint64)
        return ConfusionMatrix(counts=square, class_names=names)
    counts = np.bincount(gt_m * k + pr_m, minlength=k * k).reshape(k, k).astype(np.uint64)
    return ConfusionMatrix(counts=counts, class_names=names)


def accumulate_confusion(parts) -> ConfusionMatrix:
    """Entrywise sum; commutative, so any accumulation order is bit-identical."""
    parts = list(parts)
    if not parts:
        raise EmptyEvaluationError("no confusion matrices to accumulate")
    first = parts[0]
    total = first.counts.copy()
    for other in parts[1:]:
        if other.class_names != first.class_names:
            raise ConfigError("cannot accumulate matrices with different classes")
        total += other.counts
    return ConfusionMatrix(counts=total, class_names=first.class_names)


def mean_metric(values) -> float:
    """Mean over defined (non-NaN) entries; the mean used for mIoU and mAcc."""
    vals = [v for v in values if not math.isnan(v)]
    if not vals:
        raise EmptyEvaluationError("no defined classes to average")
    return float(sum(vals) / len(vals))


def iou_report(cm: ConfusionMatrix) -> MetricReport:
    """Per-class IoU and recall plus their means.

    A class with an empty row and column is undefined (NaN) and excluded
    from the means; recall is additionally undefined for empty rows. A
    trailing "rejected" column (void predictions, never a real class) still
    counts against the unions of real classes but gets no metrics itself.
    """
    counts = cm.counts.astype(np.float64)
    diag = np.diag(counts)
    rows = counts.sum(axis=1)
    cols = counts.sum(axis=0)
    union = rows + cols - diag
    names = cm.class_names
    n_real = len(names) - 1 if names and names[-1] == "rejected" else len(names)
    iou = []
    acc = []
    for c in range(n_real):
        if rows[c] == 0 and cols[c] == 0:
            iou.append(float("nan"))
        else:
            iou.append(float(diag[c] / union[c]) if union[c] > 0 else float("nan"))
        acc.append(float(diag[c] / rows[c]) if rows[c] > 0 else float("nan"))
    miou = mean_metric(iou)
    macc = mean_metric(acc)
    return MetricReport(
        per_class_iou=tuple(iou),
        per_class_accuracy=tuple(acc),
        miou=miou,
        macc=macc,
        class_names=names[:n_real],
        evaluated_pixels=cm.total,
    )


def merge_report_classes(cm: ConfusionMatrix, groups) -> ConfusionMatrix:
    """Sum rows/columns of the matrix over groups of class indices.

    groups must partition 0..K-1. Merging here is exactly equivalent to
    merging labels before counting.
    """
    k = len(cm.class_names)
    seen = sorted(i for g in groups for i in g)
    if seen != list(range(k)):
        raise ConfigError(f"groups {groups} do not partition 0..{k - 1}")
    m = len(groups)
    out = np.zeros((m, m), dtype=np.uint64)
    for gi, gset in enumerate(groups):
        for gj, hset in enumerate(groups):
            out[gi, gj] = cm.counts[np.ix_(list(gset), list(hset))].sum()
    names = tuple("+".join(cm.class_names[i] for i in g) for g in groups)
    return ConfusionMatrix(counts=out, class_names=names)
