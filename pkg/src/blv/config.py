# -*- coding: utf-8 -*-
"""
Carga y validación de la configuración de experimentos.

El fichero (JSON o YAML; yaml.safe_load lee ambos) tiene las secciones
dataset, split, noise, schedule, train y metrics. Cualquier clave
desconocida se rechaza indicando su ruta con puntos.
"""
from __future__ import annotations
import copy
import hashlib
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Tuple, Union

import numpy as np
import yaml

from .balancing.histogram import FrequencySource
from .balancing.loss import LossMode
from .balancing.variation import ClampRule, NoiseFamily, NoiseSpec, ScheduleMode, SigmaSchedule
from .data.blobs import BlobSpec, SplitSpec
from .errors import BLVError, ConfigError
from .training.trainer import TrainConfig

logger = logging.getLogger(__name__)

SEED_ENV = "BLV_SEED"

_REQUIRED = object()

# clave -> (valor por defecto, tipo)
SCHEMA: Dict[str, Dict[str, Tuple[Any, str]]] = {
    "dataset": {
        "counts": (_REQUIRED, "int_list"),
        "means": (None, "float_matrix"),
        "stddev": (0.9, "float"),
        "dims": (2, "int"),
        "seed": (0, "int"),
        "eval_counts": (None, "int_list"),
        "target_counts": (None, "int_list"),
        "target_shift": (None, "float_list"),
    },
    "split": {
        "labeled_fraction": (1.0, "float"),
        "seed": (0, "int"),
    },
    "noise": {
        "family": (NoiseFamily.GAUSSIAN.value, "str"),
        "sigma": (6.0, "float"),
        "alpha": (0.5, "float"),
        "beta": (0.5, "float"),
        "lambda": (1.0, "float"),
        "clamp_rule": (ClampRule.CLAMP_RAW.value, "str"),
    },
    "schedule": {
        "schedule_mode": (ScheduleMode.CONSTANT.value, "str"),
        "sigma0": (None, "float"),
        "t_mid": (0, "int"),
        "t_end": (1, "int"),
    },
    "train": {
        "mode": (LossMode.BLV.value, "str"),
        "frequency_source": (FrequencySource.GROUND_TRUTH.value, "str"),
        "epochs": (_REQUIRED, "int"),
        "batch_size": (64, "int"),
        "learning_rate": (0.05, "float"),
        "momentum": (0.9, "float"),
        "seed": (None, "int"),
        "seeds": (None, "int_list"),
        "warmup_epochs": (1, "int"),
        "hidden_units": (0, "int"),
        "init_scale": (0.1, "float"),
        "smoothing": (1.0, "float"),
        "ignore_index": (255, "int"),
        "warmup_uses_blv": (True, "bool"),
        "include_labeled_counts": (False, "bool"),
        "no_variation_constant": ("expected", "float_or_expected"),
        "debug": (False, "bool"),
    },
    "metrics": {
        "tail_classes": (None, "int_list"),
    },
}


def _is_int(v: Any) -> bool:
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool)


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)


def _coerce(key: str, value: Any, kind: str) -> Any:
    if value is None:
        return None
    if kind == "int":
        if not _is_int(value):
            raise ConfigError(key, f"se esperaba un entero, llegó {value!r}")
        return int(value)
    if kind == "float":
        if not _is_number(value):
            raise ConfigError(key, f"se esperaba un número, llegó {value!r}")
        return float(value)
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(key, f"se esperaba true/false, llegó {value!r}")
        return value
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(key, f"se esperaba un texto, llegó {value!r}")
        return value
    if kind == "float_or_expected":
        if value == "expected":
            return value
        return _coerce(key, value, "float")
    if kind in ("int_list", "float_list"):
        if not isinstance(value, list):
            raise ConfigError(key, f"se esperaba una lista, llegó {value!r}")
        item = "int" if kind == "int_list" else "float"
        return [_coerce(f"{key}[{i}]", v, item) for i, v in enumerate(value)]
    if kind == "float_matrix":
        if not isinstance(value, list):
            raise ConfigError(key, f"se esperaba una lista de vectores, llegó {value!r}")
        return [_coerce(f"{key}[{i}]", row, "float_list") for i, row in enumerate(value)]
    raise AssertionError(kind)


def load_mapping(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError("<raíz>", f"no se pudo parsear: {exc}", source=str(path)) from exc
    if not isinstance(data, dict):
        raise ConfigError("<raíz>", "la configuración debe ser un objeto", source=str(path))
    return data


def apply_overrides(mapping: Dict[str, Any], overrides: Iterable[str]) -> Dict[str, Any]:
    """Aplica `--set a.b=valor`; el valor se interpreta con YAML (3, 0.5, true, [0, 2])."""
    result = copy.deepcopy(mapping)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override sin '=' (formato clave.sub=valor)")
        dotted, raw = item.split("=", 1)
        parts = dotted.strip().split(".")
        if len(parts) != 2 or not all(parts):
            raise ConfigError(dotted, "los overrides usan la forma seccion.clave")
        section, key = parts
        node = result.setdefault(section, {})
        if not isinstance(node, dict):
            raise ConfigError(section, "no es una sección")
        node[key] = yaml.safe_load(raw)
    return result


def env_seed() -> Optional[int]:
    raw = os.getenv(SEED_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(SEED_ENV, f"no es un entero: {raw!r}") from exc


def resolve(mapping: Dict[str, Any], seed: Optional[int] = None) -> Dict[str, Any]:
    """
    Devuelve la configuración completa (con valores por defecto) y validada.

    Precedencia de la semilla: argumento `seed` > train.seed > BLV_SEED > 0.
    El resultado es el eco que se guarda en el informe y reproduce la ejecución.
    """
    if not isinstance(mapping, dict):
        raise ConfigError("<raíz>", "la configuración debe ser un objeto")
    unknown = sorted(set(mapping) - set(SCHEMA))
    if unknown:
        raise ConfigError(unknown[0], "sección desconocida")

    resolved: Dict[str, Dict[str, Any]] = {}
    for section, fields in SCHEMA.items():
        given = mapping.get(section) or {}
        if not isinstance(given, dict):
            raise ConfigError(section, "debe ser un objeto")
        extra = sorted(set(given) - set(fields))
        if extra:
            raise ConfigError(f"{section}.{extra[0]}", "clave desconocida")
        out = {}
        for key, (default, kind) in fields.items():
            path = f"{section}.{key}"
            if key in given:
                out[key] = _coerce(path, given[key], kind)
            elif default is _REQUIRED:
                raise ConfigError(path, "clave obligatoria ausente")
            else:
                out[key] = copy.deepcopy(default)
        resolved[section] = out

    train = resolved["train"]
    if seed is not None:
        train["seed"] = int(seed)
    elif train["seed"] is None:
        train["seed"] = env_seed() or 0
    if resolved["schedule"]["sigma0"] is None:
        resolved["schedule"]["sigma0"] = resolved["noise"]["sigma"]
    if resolved["metrics"]["tail_classes"] is None:
        counts = resolved["dataset"]["counts"]
        rarest = min(counts) if counts else 0
        resolved["metrics"]["tail_classes"] = [k for k, c in enumerate(counts) if c == rarest]

    # revalida invariantes de cada módulo
    build_experiment(resolved)
    return resolved


@dataclass(frozen=True)
class ExperimentConfig:
    blobs: BlobSpec
    split: SplitSpec
    train: TrainConfig
    eval_counts: Tuple[int, ...]
    target_counts: Optional[Tuple[int, ...]]
    target_shift: Optional[Tuple[float, ...]]
    seeds: Tuple[int, ...]
    resolved: Dict[str, Any]

    @property
    def num_classes(self) -> int:
        return self.blobs.num_classes

    def config_hash(self) -> str:
        return config_hash(self.resolved)


def _section(name: str, factory, **kwargs):
    try:
        return factory(**kwargs)
    except ConfigError:
        raise
    except (BLVError, ValueError, TypeError) as exc:
        raise ConfigError(name, str(exc)) from exc


def build_experiment(resolved: Dict[str, Any]) -> ExperimentConfig:
    ds, sp, nz, sc, tr, mt = (resolved[k] for k in ("dataset", "split", "noise", "schedule", "train", "metrics"))
    blobs = _section(
        "dataset", BlobSpec,
        counts=tuple(ds["counts"]), means=tuple(tuple(m) for m in ds["means"] or ()),
        stddev=ds["stddev"], dims=ds["dims"], seed=ds["seed"],
    )
    C = blobs.num_classes
    for key in ("eval_counts", "target_counts"):
        if ds[key] is not None and (len(ds[key]) != C or any(c <= 0 for c in ds[key])):
            raise ConfigError(f"dataset.{key}", f"necesita {C} conteos positivos")
    if ds["target_shift"] is not None and len(ds["target_shift"]) != blobs.dims:
        raise ConfigError("dataset.target_shift", f"necesita {blobs.dims} componentes")

    split = _section("split", SplitSpec, labeled_fraction=sp["labeled_fraction"], seed=sp["seed"])
    noise = _section(
        "noise", NoiseSpec,
        family=nz["family"], sigma=nz["sigma"], alpha=nz["alpha"], beta_param=nz["beta"],
        lam=nz["lambda"], clamp_rule=nz["clamp_rule"],
    )
    schedule = _section(
        "schedule", SigmaSchedule,
        mode=sc["schedule_mode"], sigma0=sc["sigma0"] if sc["sigma0"] is not None else nz["sigma"],
        t_mid=sc["t_mid"], t_end=sc["t_end"],
    )
    tail = tuple(mt["tail_classes"] or ())
    bad = [k for k in tail if not 0 <= k < C]
    if bad:
        raise ConfigError("metrics.tail_classes", f"clases {bad} fuera de [0, {C})")
    train = _section(
        "train", TrainConfig,
        mode=tr["mode"], noise=noise, schedule=schedule, frequency_source=tr["frequency_source"],
        epochs=tr["epochs"], batch_size=tr["batch_size"], learning_rate=tr["learning_rate"],
        momentum=tr["momentum"], seed=tr["seed"] if tr["seed"] is not None else 0, tail_classes=tail,
        warmup_epochs=tr["warmup_epochs"], hidden_units=tr["hidden_units"], init_scale=tr["init_scale"],
        smoothing=tr["smoothing"], ignore_index=tr["ignore_index"], warmup_uses_blv=tr["warmup_uses_blv"],
        include_labeled_counts=tr["include_labeled_counts"],
        no_variation_constant=tr["no_variation_constant"], debug=tr["debug"],
    )
    seeds = tuple(tr["seeds"]) if tr["seeds"] else (train.seed,)
    return ExperimentConfig(
        blobs=blobs,
        split=split,
        train=train,
        eval_counts=tuple(ds["eval_counts"] or blobs.counts),
        target_counts=tuple(ds["target_counts"]) if ds["target_counts"] else None,
        target_shift=tuple(ds["target_shift"]) if ds["target_shift"] else None,
        seeds=seeds,
        resolved=resolved,
    )


def config_hash(resolved: Dict[str, Any]) -> str:
    canonical = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:10]


def load_experiment(
    path: Union[str, Path],
    overrides: Iterable[str] = (),
    seed: Optional[int] = None,
) -> ExperimentConfig:
    mapping = apply_overrides(load_mapping(path), overrides)
    try:
        resolved = resolve(mapping, seed)
    except ConfigError as exc:
        raise ConfigError(exc.key, str(exc).split(": ", 1)[-1], source=str(path)) from exc
    logger.info("[Configuración] ✓ %s (hash %s)", path, config_hash(resolved))
    return build_experiment(resolved)


__all__ = [
    "SEED_ENV", "SCHEMA", "ExperimentConfig", "load_mapping", "apply_overrides", "env_seed",
    "resolve", "build_experiment", "config_hash", "load_experiment",
]
