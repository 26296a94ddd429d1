# -*- coding: utf-8 -*-
"""
Pérdida BLV: perturbación de logits + softmax + entropía cruzada estable.

    z_hat[i, k] = z[i, k] + coef[k] * |delta(sigma)|[i, k]

El ruido y los coeficientes son constantes para el gradiente, por lo que
d(loss)/dz = (softmax(z_hat) - onehot(y)) / n_validos.
La variación solo existe en entrenamiento; la inferencia usa z sin tocar.
"""
from __future__ import annotations
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np

from ..errors import DegenerateInputError, ShapeMismatchError
from .histogram import BalancingCoefficients
from .labels import IGNORE_INDEX, LabelBatch, LabelLike, as_label_batch
from .variation import NoiseSpec, SigmaSchedule, expected_noise, sample_noise, sigma_at

# (N, C) en float64
LogitBatch = np.ndarray


class LossMode(str, Enum):
    PLAIN_CE = "plain-ce"
    BLV = "blv"
    NO_VARIATION = "no-variation"
    NO_BALANCE = "no-balance"


@dataclass
class LossOutput:
    loss: float
    grad: np.ndarray
    valid_count: int
    perturbed_logits: Optional[np.ndarray] = None


def _check_logits(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 2:
        raise ShapeMismatchError(f"Se esperaban logits (N, C), llegó forma {z.shape}")
    if z.shape[1] < 2:
        raise ShapeMismatchError(f"Se necesitan al menos 2 clases, hay {z.shape[1]}")
    if np.isnan(z).any():
        raise ValueError("Logits con NaN")
    if not np.isfinite(z).all():
        raise ValueError("Logits no finitos")
    return z


def log_softmax(logits: LogitBatch) -> np.ndarray:
    z = _check_logits(logits)
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax(logits: LogitBatch) -> np.ndarray:
    z = _check_logits(logits)
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits: LogitBatch, targets: LabelLike) -> Tuple[float, np.ndarray]:
    """
    Media de -log softmax(z)[y] sobre las instancias no ignoradas, y su gradiente.

    Las filas ignoradas tienen gradiente cero.
    """
    z = _check_logits(logits)
    batch = as_label_batch(targets, IGNORE_INDEX)
    if len(batch) != z.shape[0]:
        raise ShapeMismatchError(f"{z.shape[0]} filas de logits frente a {len(batch)} etiquetas")
    batch.check(z.shape[1])
    valid = batch.valid_mask()
    n_valid = int(valid.sum())
    if n_valid == 0:
        raise DegenerateInputError("Todas las instancias están ignoradas: la pérdida no está definida")

    rows = np.flatnonzero(valid)
    y = batch.labels[rows]
    logp = log_softmax(z[rows])
    loss = float(-logp[np.arange(rows.size), y].mean())

    grad = np.zeros_like(z)
    g = np.exp(logp)
    g[np.arange(rows.size), y] -= 1.0
    grad[rows] = g / n_valid
    return loss, grad


def perturb_logits(
    logits: LogitBatch,
    coeffs: BalancingCoefficients,
    noise: Optional[np.ndarray],
    mode: LossMode,
    kappa: Optional[float] = None,
) -> LogitBatch:
    z = _check_logits(logits)
    mode = LossMode(mode)
    c = np.asarray(coeffs.coeffs, dtype=np.float64)
    if c.size != z.shape[1]:
        raise ShapeMismatchError(f"{c.size} coeficientes para {z.shape[1]} clases")
    if noise is not None and np.shape(noise) != z.shape:
        raise ShapeMismatchError(f"Ruido {np.shape(noise)} frente a logits {z.shape}")

    if mode is LossMode.PLAIN_CE:
        return z.copy()
    if mode is LossMode.NO_VARIATION:
        if kappa is None:
            raise ValueError("El modo no-variation necesita la constante kappa")
        return z + c * float(kappa)
    if noise is None:
        raise ValueError(f"El modo {mode.value} necesita un tensor de ruido")
    if mode is LossMode.NO_BALANCE:
        return z + noise
    return z + c * noise


def blv_loss(
    logits: LogitBatch,
    targets: LabelLike,
    coeffs: BalancingCoefficients,
    noise_spec: NoiseSpec,
    schedule: SigmaSchedule,
    t: int,
    mode: Union[LossMode, str],
    rng: np.random.Generator,
    kappa: Union[float, str, None] = "expected",
    noise: Optional[np.ndarray] = None,
    keep_perturbed: bool = False,
) -> LossOutput:
    """
    Pérdida de entrenamiento completa.

    Args:
        t: iteración actual; fija sigma mediante `sigma_at(schedule, t)`
        kappa: constante del modo no-variation; "expected" usa la media analítica
            del ruido recortado con el sigma actual
        noise: ruido congelado (mismo tamaño que los logits); si se pasa no se muestrea
    """
    z = _check_logits(logits)
    mode = LossMode(mode)
    spec = noise_spec.with_sigma(sigma_at(schedule, t))

    k_value: Optional[float] = None
    if mode is LossMode.NO_VARIATION:
        k_value = expected_noise(spec) if kappa in (None, "expected") else float(kappa)
    elif mode in (LossMode.BLV, LossMode.NO_BALANCE) and noise is None:
        noise = sample_noise(spec, z.shape, rng)

    z_hat = perturb_logits(z, coeffs, noise, mode, kappa=k_value)
    loss, grad = cross_entropy(z_hat, targets)
    valid_count = int(as_label_batch(targets, IGNORE_INDEX).valid_mask().sum())
    return LossOutput(
        loss=loss,
        grad=grad,
        valid_count=valid_count,
        perturbed_logits=z_hat if keep_perturbed else None,
    )


__all__ = [
    "LogitBatch", "LabelBatch", "LossMode", "LossOutput", "softmax", "log_softmax",
    "cross_entropy", "perturb_logits", "blv_loss",
]
