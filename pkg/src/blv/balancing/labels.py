# -*- coding: utf-8 -*-
from __future__ import annotations
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
import numpy.typing as npt

from ..errors import LabelRangeError

IGNORE_INDEX = 255


@dataclass(frozen=True)
class LabelBatch:
    """
    Vector de etiquetas enteras (una por instancia/píxel) con su ignore_index.

    `shape` solo se conserva cuando la etiqueta viene de un mapa 2D (alto, ancho).
    """
    labels: np.ndarray
    ignore_index: int = IGNORE_INDEX
    shape: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if arr.size and not np.issubdtype(arr.dtype, np.integer):
            raise TypeError(f"Las etiquetas deben ser enteras, no {arr.dtype}")
        object.__setattr__(self, "labels", arr.astype(np.int64, copy=False).ravel())

    def __len__(self) -> int:
        return int(self.labels.size)

    def valid_mask(self) -> np.ndarray:
        return self.labels != self.ignore_index

    def check(self, num_classes: int) -> None:
        """Lanza LabelRangeError con la primera posición fuera de [0, C) que no sea ignore_index."""
        bad = ((self.labels < 0) | (self.labels >= num_classes)) & self.valid_mask()
        if bad.any():
            pos = int(np.flatnonzero(bad)[0])
            raise LabelRangeError(pos, int(self.labels[pos]), num_classes, self.ignore_index)


LabelLike = Union[LabelBatch, npt.ArrayLike]


def as_label_batch(labels: LabelLike, ignore_index: int = IGNORE_INDEX) -> LabelBatch:
    if isinstance(labels, LabelBatch):
        return labels
    return LabelBatch(np.asarray(labels, dtype=np.int64), ignore_index=ignore_index)


__all__ = ["IGNORE_INDEX", "LabelBatch", "LabelLike", "as_label_batch"]
