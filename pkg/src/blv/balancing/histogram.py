# -*- coding: utf-8 -*-
"""
Conteo de instancias por clase y coeficientes de balanceo.

    c_k = log( sum_j q_j / q_k ),   coef_k = c_k / max_i c_i

Las clases con conteo cero se suavizan en `normalize` (suavizado aditivo) para
que c_k sea finito sin cambiar el orden entre clases.
"""
from __future__ import annotations
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List

import numpy as np

from ..errors import DegenerateInputError
from .labels import IGNORE_INDEX, LabelLike, as_label_batch

logger = logging.getLogger(__name__)

DEFAULT_SMOOTHING = 1.0


class FrequencySource(str, Enum):
    GROUND_TRUTH = "ground-truth"
    PSEUDO_EPOCH = "pseudo-epoch"
    SOURCE_PROXY = "source-proxy"
    LABELED_ONLY = "labeled-only"


@dataclass(frozen=True)
class ClassHistogram:
    counts: np.ndarray
    ignored: int
    num_classes: int

    @property
    def total(self) -> int:
        """Píxeles procesados, incluidos los ignorados."""
        return int(self.counts.sum()) + self.ignored

    def __add__(self, other: "ClassHistogram") -> "ClassHistogram":
        if other.num_classes != self.num_classes:
            raise ValueError(f"Histogramas con distinto número de clases: {self.num_classes} != {other.num_classes}")
        return ClassHistogram(self.counts + other.counts, self.ignored + other.ignored, self.num_classes)

    @classmethod
    def empty(cls, num_classes: int) -> "ClassHistogram":
        return cls(np.zeros(num_classes, dtype=np.int64), 0, num_classes)

    def to_dict(self) -> dict:
        return {"counts": self.counts.tolist(), "ignored": self.ignored, "num_classes": self.num_classes}


@dataclass(frozen=True)
class FrequencyVector:
    freqs: np.ndarray

    def __len__(self) -> int:
        return int(self.freqs.size)

    def to_list(self) -> List[float]:
        return [float(f) for f in self.freqs]


@dataclass(frozen=True)
class BalancingCoefficients:
    coeffs: np.ndarray
    raw: np.ndarray

    def __len__(self) -> int:
        return int(self.coeffs.size)

    def tail_ranking(self) -> List[int]:
        """Clases de la más rara (coef 1) a la más frecuente."""
        # estable: en empate manda el índice menor
        return [int(k) for k in np.argsort(-self.coeffs, kind="stable")]

    def to_dict(self) -> dict:
        return {"coeffs": self.coeffs.tolist(), "raw": self.raw.tolist()}


def count_pixels(labels: LabelLike, num_classes: int, ignore_index: int = IGNORE_INDEX) -> ClassHistogram:
    if num_classes < 1:
        raise ValueError(f"num_classes debe ser positivo, no {num_classes}")
    batch = as_label_batch(labels, ignore_index)
    batch.check(num_classes)
    valid = batch.valid_mask()
    counts = np.bincount(batch.labels[valid], minlength=num_classes).astype(np.int64)
    return ClassHistogram(counts=counts, ignored=int((~valid).sum()), num_classes=num_classes)


def normalize(hist: ClassHistogram, smoothing: float = DEFAULT_SMOOTHING) -> FrequencyVector:
    if smoothing < 0 or not np.isfinite(smoothing):
        raise ValueError(f"smoothing debe ser >= 0, no {smoothing}")
    # numerador y denominador enteros mientras smoothing == 0
    total = int(hist.counts.sum())
    denom = total + hist.num_classes * smoothing
    if denom <= 0:
        raise DegenerateInputError("Histograma sin instancias válidas y smoothing=0: frecuencias indefinidas")
    freqs = (hist.counts + smoothing) / denom
    return FrequencyVector(np.asarray(freqs, dtype=np.float64))


def update_from_pseudo_labels(
    pseudo_label_batches: Iterable[LabelLike],
    num_classes: int,
    ignore_index: int = IGNORE_INDEX,
    smoothing: float = DEFAULT_SMOOTHING,
) -> FrequencyVector:
    """
    Distribución por clase a partir de los pseudo-labels de una época.

    Se llama una vez por época con las predicciones del modelo actual sobre
    todo el conjunto sin etiquetar.
    """
    hist = pseudo_label_histogram(pseudo_label_batches, num_classes, ignore_index)
    logger.debug("[Frecuencias] Pseudo-labels: %s (ignorados %d)", hist.counts.tolist(), hist.ignored)
    return normalize(hist, smoothing)


def pseudo_label_histogram(
    pseudo_label_batches: Iterable[LabelLike],
    num_classes: int,
    ignore_index: int = IGNORE_INDEX,
) -> ClassHistogram:
    hist = ClassHistogram.empty(num_classes)
    for batch in pseudo_label_batches:
        hist = hist + count_pixels(batch, num_classes, ignore_index)
    return hist


def balancing_coefficients(freqs: FrequencyVector) -> BalancingCoefficients:
    q = np.asarray(freqs.freqs, dtype=np.float64)
    if q.size < 2:
        raise ValueError("Se necesitan al menos 2 clases para balancear")
    if not np.all(q > 0):
        bad = int(np.flatnonzero(~(q > 0))[0])
        raise DegenerateInputError(
            f"Frecuencia no positiva en la clase {bad} ({q[bad]}); aplica smoothing antes"
        )
    raw = np.log(q.sum() / q)
    coeffs = raw / raw.max()
    return BalancingCoefficients(coeffs=coeffs, raw=raw)


def coefficients_from_labels(
    labels: LabelLike,
    num_classes: int,
    ignore_index: int = IGNORE_INDEX,
    smoothing: float = DEFAULT_SMOOTHING,
) -> tuple[ClassHistogram, FrequencyVector, BalancingCoefficients]:
    hist = count_pixels(labels, num_classes, ignore_index)
    freqs = normalize(hist, smoothing)
    return hist, freqs, balancing_coefficients(freqs)


__all__ = [
    "DEFAULT_SMOOTHING", "FrequencySource", "ClassHistogram", "FrequencyVector",
    "BalancingCoefficients", "count_pixels", "normalize", "update_from_pseudo_labels",
    "pseudo_label_histogram", "balancing_coefficients", "coefficients_from_labels",
]
