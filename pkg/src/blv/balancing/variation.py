# -*- coding: utf-8 -*-
"""
Muestreo de la variación |delta(sigma)| y calendario temporal de sigma.

Todas las familias se recortan a [0, 1]. El orden por defecto (clamp-raw)
recorta antes del valor absoluto, igual que `sample(shape).clamp(0, 1).abs()`,
así que los valores negativos quedan en 0.
"""
from __future__ import annotations
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Tuple

import numpy as np
from scipy import special, stats

from ..errors import ScheduleError


class NoiseFamily(str, Enum):
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"
    BETA = "beta"
    EXPONENTIAL = "exponential"
    NONE = "none"


class ClampRule(str, Enum):
    CLAMP_RAW = "clamp-raw"
    ABS_THEN_CLAMP = "abs-then-clamp"


class ScheduleMode(str, Enum):
    CONSTANT = "constant"
    TEMPORAL = "temporal"


def _finite_positive(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{name} debe ser un real positivo finito, no {value}")


@dataclass(frozen=True)
class NoiseSpec:
    family: NoiseFamily = NoiseFamily.GAUSSIAN
    sigma: float = 6.0
    alpha: float = 0.5
    beta_param: float = 0.5
    lam: float = 1.0
    clamp_rule: ClampRule = ClampRule.CLAMP_RAW

    def __post_init__(self):
        object.__setattr__(self, "family", NoiseFamily(self.family))
        object.__setattr__(self, "clamp_rule", ClampRule(self.clamp_rule))
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError(f"sigma debe ser >= 0 y finito, no {self.sigma}")
        _finite_positive("alpha", self.alpha)
        _finite_positive("beta", self.beta_param)
        _finite_positive("lambda", self.lam)

    def with_sigma(self, sigma: float) -> "NoiseSpec":
        return replace(self, sigma=float(sigma))

    def to_dict(self) -> dict:
        return {
            "family": self.family.value, "sigma": self.sigma, "alpha": self.alpha,
            "beta": self.beta_param, "lambda": self.lam, "clamp_rule": self.clamp_rule.value,
        }


@dataclass(frozen=True)
class SigmaSchedule:
    mode: ScheduleMode = ScheduleMode.CONSTANT
    sigma0: float = 6.0
    t_mid: int = 0
    t_end: int = 1

    def __post_init__(self):
        object.__setattr__(self, "mode", ScheduleMode(self.mode))
        if not (math.isfinite(self.sigma0) and self.sigma0 >= 0):
            raise ValueError(f"sigma0 debe ser >= 0 y finito, no {self.sigma0}")
        if self.mode is ScheduleMode.TEMPORAL and not (0 < self.t_mid < self.t_end):
            raise ScheduleError(f"El calendario temporal exige 0 < t_mid < t_end (t_mid={self.t_mid}, t_end={self.t_end})")

    def to_dict(self) -> dict:
        return {"mode": self.mode.value, "sigma0": self.sigma0, "t_mid": self.t_mid, "t_end": self.t_end}


def sigma_at(schedule: SigmaSchedule, t: int) -> float:
    """
    sigma en la iteración t.

    Modo temporal: lineal a trozos por (0, 0), (t_mid, sigma0), (t_end, 0).
    """
    if t < 0:
        raise ScheduleError(f"Iteración negativa: {t}")
    if schedule.mode is ScheduleMode.CONSTANT:
        return float(schedule.sigma0)
    if t > schedule.t_end:
        raise ScheduleError(f"Iteración {t} posterior a t_end={schedule.t_end}")
    if t <= schedule.t_mid:
        return schedule.sigma0 * t / schedule.t_mid
    return schedule.sigma0 * (schedule.t_end - t) / (schedule.t_end - schedule.t_mid)


def _raw_draws(spec: NoiseSpec, shape: Tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    if spec.family is NoiseFamily.GAUSSIAN:
        return spec.sigma * rng.standard_normal(shape)
    if spec.family is NoiseFamily.UNIFORM:
        return rng.random(shape)
    if spec.family is NoiseFamily.BETA:
        u = rng.random(shape)
        if spec.alpha == 0.5 and spec.beta_param == 0.5:
            # arcoseno: inversa exacta
            return np.sin(0.5 * np.pi * u) ** 2
        return special.betaincinv(spec.alpha, spec.beta_param, u)
    if spec.family is NoiseFamily.EXPONENTIAL:
        # 1 - u en (0, 1]
        return -np.log1p(-rng.random(shape)) / spec.lam
    raise ValueError(f"Familia sin muestreador: {spec.family}")


def sample_noise(spec: NoiseSpec, shape: Tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    """
    Tensor de ruido i.i.d. por elemento (instancia, clase), con valores en [0, 1].

    family=none devuelve ceros sin consumir el generador.
    """
    shape = tuple(int(s) for s in shape)
    if not shape or any(s <= 0 for s in shape):
        raise ValueError(f"Forma inválida para el ruido: {shape}")
    if spec.family is NoiseFamily.NONE:
        return np.zeros(shape, dtype=np.float64)
    x = _raw_draws(spec, shape, rng)
    if spec.clamp_rule is ClampRule.CLAMP_RAW:
        return np.clip(x, 0.0, 1.0)
    return np.minimum(np.abs(x), 1.0)


def expected_noise(spec: NoiseSpec) -> float:
    """Media analítica del ruido ya recortado (kappa del modo sin variación)."""
    if spec.family is NoiseFamily.NONE:
        return 0.0
    if spec.family is NoiseFamily.UNIFORM:
        return 0.5
    if spec.family is NoiseFamily.BETA:
        return spec.alpha / (spec.alpha + spec.beta_param)
    if spec.family is NoiseFamily.EXPONENTIAL:
        return -math.expm1(-spec.lam) / spec.lam
    if spec.sigma == 0:
        return 0.0
    # E[clip(X, 0, 1)], X ~ N(0, sigma): sigma*(phi(0) - phi(1/sigma)) + P(X > 1)
    a = 1.0 / spec.sigma
    half = spec.sigma * (stats.norm.pdf(0.0) - stats.norm.pdf(a)) + stats.norm.sf(a)
    if spec.clamp_rule is ClampRule.CLAMP_RAW:
        return float(half)
    # |X| es semi-normal: la masa negativa se refleja
    return float(2.0 * half)


__all__ = [
    "NoiseFamily", "ClampRule", "ScheduleMode", "NoiseSpec", "SigmaSchedule",
    "sigma_at", "sample_noise", "expected_noise",
]
