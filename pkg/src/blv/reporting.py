# -*- coding: utf-8 -*-
"""
Informes de ejecución (JSON con "schema": 1), tabla resumen de ablaciones y
gráficas SVG.
"""
from __future__ import annotations
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import pandas as pd

from .balancing.histogram import BalancingCoefficients, ClassHistogram, FrequencyVector
from .training.trainer import TrainResult

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

# clave obligatoria -> tipos admitidos
REPORT_SCHEMA: Dict[str, tuple] = {
    "schema": (int,),
    "command": (str,),
    "mode": (str,),
    "seed": (int,),
    "config": (dict,),
    "frequency_history": (list,),
    "coefficients": (dict,),
    "loss_curve": (list,),
    "miou_curve": (list,),
    "tail_miou_curve": (list,),
    "metrics": (dict,),
    "iterations": (int,),
    "wall_clock_seconds": (float, int),
}

METRICS_KEYS = ("per_class_iou", "miou", "tail_miou", "tail_classes", "per_class_recall")


def build_run_report(
    command: str,
    resolved: Dict[str, Any],
    result: TrainResult,
    wall_clock: float,
    include_debug: bool = False,
) -> Dict[str, Any]:
    report: Dict[str, Any] = {
        "schema": SCHEMA_VERSION,
        "command": command,
        "mode": resolved["train"]["mode"],
        "seed": int(result.seed),
        "config": resolved,
        "frequency_history": [f.to_list() for f in result.frequency_history],
        "coefficients": result.coefficients.to_dict() if result.coefficients is not None else {},
        "loss_curve": [float(v) for v in result.loss_curve],
        "miou_curve": [float(v) for v in result.miou_curve],
        "tail_miou_curve": [None if v is None else float(v) for v in result.tail_miou_curve],
        "pseudo_label_histograms": [h.to_dict() if h is not None else None for h in result.pseudo_label_histograms],
        "metrics": result.metrics.to_dict(),
        "iterations": int(result.iterations),
        "wall_clock_seconds": float(wall_clock),
    }
    if include_debug and result.perturbed_logits is not None:
        report["debug"] = {"perturbed_logits": result.perturbed_logits.tolist()}
    return report


def validate_report(report: Dict[str, Any]) -> List[str]:
    """Lista de problemas frente al esquema publicado (vacía si es válido)."""
    problems = []
    for key, types in REPORT_SCHEMA.items():
        if key not in report:
            problems.append(f"falta '{key}'")
        elif isinstance(report[key], bool) or not isinstance(report[key], types):
            problems.append(f"'{key}' tiene tipo {type(report[key]).__name__}")
    if report.get("schema") != SCHEMA_VERSION:
        problems.append(f"schema={report.get('schema')!r}, se esperaba {SCHEMA_VERSION}")
    metrics = report.get("metrics") or {}
    problems += [f"falta 'metrics.{k}'" for k in METRICS_KEYS if k not in metrics]
    epochs = len(report.get("loss_curve") or [])
    for key in ("frequency_history", "miou_curve", "tail_miou_curve"):
        if isinstance(report.get(key), list) and len(report[key]) != epochs:
            problems.append(f"'{key}' tiene {len(report[key])} entradas para {epochs} épocas")
    for i, freqs in enumerate(report.get("frequency_history") or []):
        if not math.isclose(sum(freqs), 1.0, abs_tol=1e-9):
            problems.append(f"frequency_history[{i}] no suma 1")
    return problems


def write_json(path: Union[str, Path], payload: Dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
    logger.info("[Guardado] %s", path)
    return path


def freq_fragment(
    paths: Sequence[str],
    hist: ClassHistogram,
    freqs: FrequencyVector,
    coeffs: BalancingCoefficients,
    smoothing: float,
    ignore_index: int,
) -> Dict[str, Any]:
    return {
        "schema": SCHEMA_VERSION,
        "command": "freq",
        "files": list(paths),
        "ignore_index": ignore_index,
        "smoothing": smoothing,
        "histogram": hist.to_dict(),
        "frequencies": freqs.to_list(),
        "coefficients": coeffs.to_dict(),
        "tail_ranking": coeffs.tail_ranking(),
    }


def freq_table(hist: ClassHistogram, freqs: FrequencyVector, coeffs: BalancingCoefficients) -> pd.DataFrame:
    return pd.DataFrame({
        "clase": range(hist.num_classes),
        "pixeles": hist.counts,
        "frecuencia": freqs.freqs,
        "c_k": coeffs.raw,
        "coeficiente": coeffs.coeffs,
    }).set_index("clase")


def ablation_summary(runs: List[Dict[str, Any]]) -> pd.DataFrame:
    """Mediana de tail-mIoU y mIoU por valor del eje, en el orden en que se pidieron."""
    columns = ["value", "runs", "median_tail_miou", "median_miou"]
    if not runs:
        return pd.DataFrame(columns=columns)
    df = pd.DataFrame(runs)
    df["tail_miou"] = pd.to_numeric(df["tail_miou"], errors="coerce")
    df["value"] = df["value"].astype(str)
    summary = (
        df.groupby("value", sort=False)
        .agg(runs=("seed", "count"), median_tail_miou=("tail_miou", "median"), median_miou=("miou", "median"))
        .reset_index()
    )
    return summary[columns]


def write_ablation_summary(
    out_dir: Union[str, Path],
    axis: str,
    runs: List[Dict[str, Any]],
    complete: bool,
) -> Dict[str, Any]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = ablation_summary(runs)
    summary.to_csv(out_dir / "summary.csv", index=False)
    payload = {
        "schema": SCHEMA_VERSION,
        "command": "ablate",
        "axis": axis,
        "complete": complete,
        # NaN -> null
        "rows": json.loads(summary.to_json(orient="records")),
        "runs": runs,
    }
    write_json(out_dir / "summary.json", payload)
    return payload


def plot_curves(path: Union[str, Path], result: TrainResult, title: Optional[str] = None) -> Path:
    """SVG con la pérdida por época y el tail-mIoU por época."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    epochs = range(1, len(result.loss_curve) + 1)
    tail = [float("nan") if v is None else v for v in result.tail_miou_curve]

    fig, axes = plt.subplots(1, 2, figsize=(11, 4))
    axes[0].plot(epochs, result.loss_curve, color="darkorange", lw=2)
    axes[0].set_xlabel("Época")
    axes[0].set_ylabel("Pérdida media")
    axes[0].set_title("Curva de pérdida")
    axes[0].grid(alpha=0.3)

    axes[1].plot(epochs, tail, color="blue", lw=2, label="tail-mIoU")
    axes[1].plot(epochs, result.miou_curve, color="navy", lw=1, linestyle="--", label="mIoU")
    axes[1].set_ylim([0.0, 1.05])
    axes[1].set_xlabel("Época")
    axes[1].set_ylabel("IoU")
    axes[1].set_title("IoU en evaluación (sin ruido)")
    axes[1].legend(loc="lower right")
    axes[1].grid(alpha=0.3)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg")
    plt.close(fig)
    logger.info("[Métricas] Gráfica guardada en: %s", path)
    return path


__all__ = [
    "SCHEMA_VERSION", "REPORT_SCHEMA", "build_run_report", "validate_report", "write_json",
    "freq_fragment", "freq_table", "ablation_summary", "write_ablation_summary", "plot_curves",
]
