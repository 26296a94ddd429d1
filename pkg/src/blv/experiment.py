# -*- coding: utf-8 -*-
"""
Orquestación de una ejecución: genera los conjuntos, elige el bucle según la
fuente de frecuencias y devuelve el resultado listo para el informe.
"""
from __future__ import annotations
import copy
import logging
import time
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .balancing.histogram import FrequencySource
from .config import ExperimentConfig, build_experiment, resolve
from .data.blobs import Dataset, generate_longtail_blobs, split_labeled_unlabeled
from .errors import ConfigError
from .training.trainer import TrainResult, self_train, train

logger = logging.getLogger(__name__)

# ejes de ablación -> valores por defecto
ABLATION_AXES: Dict[str, List[Any]] = {
    "variation-family": ["gaussian", "uniform", "beta", "exponential"],
    "sigma": [3.0, 4.0, 5.0, 6.0, 7.0],
    "components": ["blv", "no-variation", "no-balance", "plain-ce"],
    "frequency-source": ["ground-truth", "labeled-only", "pseudo-epoch"],
    "schedule": ["constant", "temporal"],
}


@dataclass
class ExperimentData:
    labeled: Dataset
    unlabeled: Dataset
    eval_set: Dataset
    source: Optional[Dataset] = None


def build_datasets(exp: ExperimentConfig) -> ExperimentData:
    """
    Conjuntos de la ejecución (deterministas con dataset.seed):
      - entrenamiento: BlobSpec tal cual, dividido según `split`
      - evaluación: misma geometría, semilla + 1 y `eval_counts`
      - source-proxy: el origen es todo el conjunto generado; el dominio destino
        usa `target_counts`, centros desplazados `target_shift` y semilla + 2
    """
    spec = exp.blobs
    full = generate_longtail_blobs(spec)
    if exp.train.frequency_source is FrequencySource.SOURCE_PROXY:
        shift = np.asarray(exp.target_shift or [0.0] * spec.dims)
        target_means = tuple(tuple(np.asarray(m) + shift) for m in spec.means)
        target_spec = replace(spec, means=target_means, counts=exp.target_counts or spec.counts, seed=spec.seed + 2)
        target = generate_longtail_blobs(target_spec)
        eval_set = generate_longtail_blobs(replace(target_spec, counts=exp.eval_counts, seed=spec.seed + 3))
        return ExperimentData(labeled=full, unlabeled=target, eval_set=eval_set, source=full)

    eval_set = generate_longtail_blobs(replace(spec, counts=exp.eval_counts, seed=spec.seed + 1))
    labeled, unlabeled = split_labeled_unlabeled(full, exp.split)
    return ExperimentData(labeled=labeled, unlabeled=unlabeled, eval_set=eval_set)


def run_experiment(exp: ExperimentConfig, show_progress: bool = False) -> TrainResult:
    data = build_datasets(exp)
    cfg = exp.train
    if cfg.frequency_source is FrequencySource.GROUND_TRUTH:
        if len(data.unlabeled):
            logger.info("[Entrenamiento] ground-truth: se ignoran %d muestras sin etiquetar", len(data.unlabeled))
        return train(cfg, data.labeled, data.eval_set, show_progress=show_progress)
    return self_train(cfg, data.labeled, data.unlabeled, data.eval_set, source=data.source, show_progress=show_progress)


def apply_axis(resolved: Dict[str, Any], axis: str, value: Any) -> Dict[str, Any]:
    """Copia de la configuración con el valor del eje aplicado."""
    if axis not in ABLATION_AXES:
        raise ConfigError("axis", f"eje desconocido {axis!r} (opciones: {', '.join(ABLATION_AXES)})")
    out = copy.deepcopy(resolved)
    if axis == "variation-family":
        out["noise"]["family"] = str(value)
    elif axis == "sigma":
        out["noise"]["sigma"] = float(value)
        out["schedule"]["sigma0"] = float(value)
    elif axis == "components":
        out["train"]["mode"] = str(value)
    elif axis == "frequency-source":
        out["train"]["frequency_source"] = str(value)
    elif axis == "schedule":
        out["schedule"]["schedule_mode"] = str(value)
    return out


def parse_axis_values(axis: str, raw: Optional[str]) -> List[Any]:
    if axis not in ABLATION_AXES:
        raise ConfigError("axis", f"eje desconocido {axis!r}")
    if not raw:
        return list(ABLATION_AXES[axis])
    items = [v.strip() for v in raw.split(",") if v.strip()]
    if axis == "sigma":
        try:
            return [float(v) for v in items]
        except ValueError as exc:
            raise ConfigError("values", f"sigma necesita números: {raw!r}") from exc
    allowed = set(ABLATION_AXES[axis]) | ({"source-proxy"} if axis == "frequency-source" else set())
    bad = [v for v in items if v not in allowed]
    if bad:
        raise ConfigError("values", f"valores {bad} no válidos para {axis} ({', '.join(sorted(allowed))})")
    return items


def ablation_cells(exp: ExperimentConfig, axis: str, values: Sequence[Any]) -> List[Dict[str, Any]]:
    """Una celda por (valor, semilla), cada una con su configuración ya validada."""
    if (axis == "frequency-source" and FrequencySource.PSEUDO_EPOCH.value in map(str, values)
            and exp.split.labeled_fraction >= 1.0):
        raise ConfigError(
            "split.labeled_fraction",
            "pseudo-epoch necesita datos sin etiquetar (fracción < 1); "
            "usa configs/semi_supervised.json o --values ground-truth,labeled-only",
        )
    cells = []
    for value in values:
        for seed in exp.seeds:
            resolved = resolve(apply_axis(exp.resolved, axis, value), seed=seed)
            cells.append({"axis": axis, "value": value, "seed": seed, "resolved": resolved})
    return cells


def timed_run(resolved: Dict[str, Any], show_progress: bool = False):
    exp = build_experiment(resolved)
    start = time.perf_counter()
    result = run_experiment(exp, show_progress=show_progress)
    return exp, result, time.perf_counter() - start


__all__ = [
    "ABLATION_AXES", "ExperimentData", "build_datasets", "run_experiment", "apply_axis",
    "parse_axis_values", "ablation_cells", "timed_run",
]
