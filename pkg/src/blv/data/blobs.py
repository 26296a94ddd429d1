# -*- coding: utf-8 -*-
"""
Generador de datos long-tail a escala de escritorio.

Cada "píxel" es un punto 2D (o de `dims` dimensiones) muestreado de una
normal isotrópica por clase. Con clusters solapados la clase de cola queda
aplastada por las de cabeza, que es la situación que BLV intenta corregir.
"""
from __future__ import annotations
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from sklearn.datasets import make_blobs
from sklearn.model_selection import train_test_split

from ..errors import DegenerateInputError

logger = logging.getLogger(__name__)

DEFAULT_COUNTS = (2000, 200, 20)
DEFAULT_ANGLES = (90.0, 210.0, 330.0)
DEFAULT_STDDEV = 0.9


def _legacy_rng(seed: int) -> np.random.RandomState:
    # RandomState solo admite semillas de 32 bits; MT19937 acepta cualquier entero
    return np.random.RandomState(np.random.MT19937(int(seed)))


def circle_means(num_classes: int, dims: int = 2, angles: Optional[Sequence[float]] = None) -> List[List[float]]:
    """Centros en el círculo unidad; por defecto a 90/210/330 grados para C=3."""
    if angles is None:
        angles = DEFAULT_ANGLES if num_classes == 3 else [90.0 + 360.0 * k / num_classes for k in range(num_classes)]
    means = []
    for a in angles:
        rad = math.radians(a)
        means.append([math.cos(rad), math.sin(rad)] + [0.0] * (dims - 2))
    return means


@dataclass(frozen=True)
class BlobSpec:
    counts: Tuple[int, ...] = DEFAULT_COUNTS
    means: Tuple[Tuple[float, ...], ...] = ()
    stddev: float = DEFAULT_STDDEV
    dims: int = 2
    seed: int = 0

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if len(counts) < 2:
            raise ValueError(f"Se necesitan al menos 2 clases, hay {len(counts)}")
        if any(c <= 0 for c in counts):
            raise ValueError(f"Los conteos por clase deben ser positivos: {list(counts)}")
        if self.dims < 2:
            raise ValueError(f"dims debe ser >= 2, no {self.dims}")
        means = self.means or circle_means(len(counts), self.dims)
        means = tuple(tuple(float(v) for v in m) for m in means)
        object.__setattr__(self, "means", means)
        if len(means) != len(counts):
            raise ValueError(f"{len(means)} centros para {len(counts)} clases")
        if any(len(m) != self.dims for m in means):
            raise ValueError(f"Todos los centros deben tener {self.dims} dimensiones")
        if not (math.isfinite(self.stddev) and self.stddev >= 0):
            raise ValueError(f"stddev debe ser >= 0, no {self.stddev}")
        if self.stddev == 0 and len(set(means)) < len(means):
            raise DegenerateInputError("Centros repetidos con stddev=0: clases indistinguibles")

    @property
    def num_classes(self) -> int:
        return len(self.counts)

    def to_dict(self) -> dict:
        return {
            "counts": list(self.counts), "means": [list(m) for m in self.means],
            "stddev": self.stddev, "dims": self.dims, "seed": self.seed,
        }


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    num_classes: int = field(default=0)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[0] != self.labels.shape[0]:
            raise ValueError(f"features {self.features.shape} y labels {self.labels.shape} no cuadran")
        if not self.num_classes:
            self.num_classes = int(self.labels.max()) + 1 if self.labels.size else 0

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def dims(self) -> int:
        return int(self.features.shape[1])

    def subset(self, idx: np.ndarray) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.num_classes)

    def with_labels(self, labels: np.ndarray) -> "Dataset":
        return Dataset(self.features, labels, self.num_classes)

    def concat(self, other: "Dataset") -> "Dataset":
        return Dataset(
            np.concatenate([self.features, other.features]),
            np.concatenate([self.labels, other.labels]),
            max(self.num_classes, other.num_classes),
        )


@dataclass(frozen=True)
class SplitSpec:
    labeled_fraction: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.labeled_fraction <= 1.0):
            raise ValueError(f"labeled_fraction debe estar en (0, 1], no {self.labeled_fraction}")


def generate_longtail_blobs(spec: BlobSpec) -> Dataset:
    """Exactamente counts[k] muestras por clase, en orden de clase."""
    features, labels = make_blobs(
        n_samples=list(spec.counts),
        n_features=spec.dims,
        centers=np.asarray(spec.means),
        cluster_std=spec.stddev,
        shuffle=False,
        random_state=_legacy_rng(spec.seed),
    )
    logger.debug("[Datos] Blobs generados: %s (semilla %d)", list(spec.counts), spec.seed)
    return Dataset(features, labels, spec.num_classes)


def split_indices(n: int, split: SplitSpec) -> Tuple[np.ndarray, np.ndarray]:
    n_labeled = int(round(split.labeled_fraction * n))
    if n_labeled < 1:
        raise DegenerateInputError(f"La fracción {split.labeled_fraction} deja vacío el subconjunto etiquetado (N={n})")
    all_idx = np.arange(n)
    if n_labeled >= n:
        return all_idx, np.empty(0, dtype=np.int64)
    # sin estratificar: las clases raras pueden faltar en la parte etiquetada
    lab, unlab = train_test_split(all_idx, train_size=n_labeled, shuffle=True, random_state=_legacy_rng(split.seed))
    return np.sort(lab), np.sort(unlab)


def split_labeled_unlabeled(ds: Dataset, split: SplitSpec) -> Tuple[Dataset, Dataset]:
    lab, unlab = split_indices(len(ds), split)
    logger.info("[Datos] División: %d etiquetadas / %d sin etiquetar", lab.size, unlab.size)
    return ds.subset(lab), ds.subset(unlab)


__all__ = [
    "DEFAULT_COUNTS", "DEFAULT_ANGLES", "DEFAULT_STDDEV", "BlobSpec", "Dataset", "SplitSpec",
    "circle_means", "generate_longtail_blobs", "split_indices", "split_labeled_unlabeled",
]
