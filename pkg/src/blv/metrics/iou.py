# -*- coding: utf-8 -*-
"""
Matriz de confusión (filas = verdad, columnas = predicción) y métricas IoU.

Las clases sin soporte (TP + FP + FN == 0) no entran en las medias y se
marcan como indefinidas (None al serializar).
"""
from __future__ import annotations
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np
from sklearn.metrics import confusion_matrix

from ..balancing.labels import IGNORE_INDEX, LabelLike, as_label_batch
from ..errors import DegenerateInputError, LabelRangeError, ShapeMismatchError


@dataclass(frozen=True)
class ConfusionMatrix:
    cells: np.ndarray
    ignored: int = 0

    @property
    def num_classes(self) -> int:
        return int(self.cells.shape[0])

    @property
    def evaluated(self) -> int:
        return int(self.cells.sum()) + self.ignored

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if other.cells.shape != self.cells.shape:
            raise ShapeMismatchError(f"Matrices {self.cells.shape} y {other.cells.shape}")
        return ConfusionMatrix(self.cells + other.cells, self.ignored + other.ignored)


def _nullable(values: np.ndarray, defined: np.ndarray) -> List[Optional[float]]:
    return [float(v) if d else None for v, d in zip(values, defined)]


@dataclass
class MetricsReport:
    per_class_iou: List[Optional[float]]
    miou: float
    tail_miou: Optional[float]
    tail_classes: List[int]
    per_class_recall: List[Optional[float]]
    per_class_precision: List[Optional[float]] = field(default_factory=list)
    undefined_classes: List[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "per_class_iou": self.per_class_iou,
            "miou": self.miou,
            "tail_miou": self.tail_miou,
            "tail_classes": self.tail_classes,
            "per_class_recall": self.per_class_recall,
            "per_class_precision": self.per_class_precision,
            "undefined_classes": self.undefined_classes,
        }


def confusion(
    pred: LabelLike,
    gt: LabelLike,
    num_classes: int,
    ignore_index: int = IGNORE_INDEX,
) -> ConfusionMatrix:
    gt_batch = as_label_batch(gt, ignore_index)
    pred_arr = np.asarray(pred.labels if hasattr(pred, "labels") else pred, dtype=np.int64).ravel()
    if pred_arr.size != len(gt_batch):
        raise ShapeMismatchError(f"{pred_arr.size} predicciones frente a {len(gt_batch)} etiquetas")
    gt_batch.check(num_classes)
    valid = gt_batch.valid_mask()
    y_true = gt_batch.labels[valid]
    y_pred = pred_arr[valid]
    bad = (y_pred < 0) | (y_pred >= num_classes)
    if bad.any():
        pos = int(np.flatnonzero(valid)[np.flatnonzero(bad)[0]])
        raise LabelRangeError(pos, int(pred_arr[pos]), num_classes, ignore_index)
    ignored = int((~valid).sum())
    if y_true.size == 0:
        # confusion_matrix de sklearn rechaza entradas sin ninguna etiqueta presente
        return ConfusionMatrix(np.zeros((num_classes, num_classes), dtype=np.int64), ignored)
    cells = confusion_matrix(y_true, y_pred, labels=np.arange(num_classes)).astype(np.int64)
    return ConfusionMatrix(cells, ignored)


def iou_report(cm: ConfusionMatrix, tail_classes: Iterable[int] = ()) -> MetricsReport:
    C = cm.num_classes
    if C < 2:
        raise ValueError("iou_report necesita al menos 2 clases")
    tail = sorted({int(k) for k in tail_classes})
    if any(k < 0 or k >= C for k in tail):
        raise ValueError(f"Clases de cola fuera de [0, {C}): {tail}")

    cells = cm.cells.astype(np.float64)
    tp = np.diag(cells)
    gt_total = cells.sum(axis=1)
    pred_total = cells.sum(axis=0)
    union = gt_total + pred_total - tp
    defined = union > 0
    if not defined.any():
        raise DegenerateInputError("Ninguna clase tiene soporte: mIoU indefinido")

    iou = np.divide(tp, union, out=np.zeros(C), where=defined)
    recall = np.divide(tp, gt_total, out=np.zeros(C), where=gt_total > 0)
    precision = np.divide(tp, pred_total, out=np.zeros(C), where=pred_total > 0)

    tail_defined = [k for k in tail if defined[k]]
    return MetricsReport(
        per_class_iou=_nullable(iou, defined),
        miou=float(iou[defined].mean()),
        tail_miou=float(np.mean(iou[tail_defined])) if tail_defined else None,
        tail_classes=tail,
        per_class_recall=_nullable(recall, gt_total > 0),
        per_class_precision=_nullable(precision, pred_total > 0),
        undefined_classes=[int(k) for k in np.flatnonzero(~defined)],
    )


def evaluate_predictions(
    pred: LabelLike,
    gt: LabelLike,
    num_classes: int,
    tail_classes: Sequence[int] = (),
    ignore_index: int = IGNORE_INDEX,
) -> MetricsReport:
    return iou_report(confusion(pred, gt, num_classes, ignore_index), tail_classes)


__all__ = ["ConfusionMatrix", "MetricsReport", "confusion", "iou_report", "evaluate_predictions"]
