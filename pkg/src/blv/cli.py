# -*- coding: utf-8 -*-
"""
Línea de comandos: `blv freq|train|ablate|evaluate`.

    PYTHONPATH=src python -m blv freq mapas/*.pgm -C 19
    PYTHONPATH=src python -m blv train --config configs/longtail_toy.json --plot
    PYTHONPATH=src python -m blv ablate --config configs/longtail_toy.json --axis sigma
"""
from __future__ import annotations
import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv
from joblib import Parallel, delayed

from .balancing.histogram import ClassHistogram, balancing_coefficients, count_pixels, normalize
from .config import config_hash, load_experiment
from .data.pgm import load_label_map
from .errors import BLVError, PGMParseError
from .experiment import ABLATION_AXES, ablation_cells, build_datasets, parse_axis_values, timed_run
from .metrics.iou import evaluate_predictions
from .models.loader import ARTIFACT_NAME, load_artifact, save_artifact
from .reporting import (
    build_run_report,
    freq_fragment,
    freq_table,
    plot_curves,
    validate_report,
    write_ablation_summary,
    write_json,
)
from .training.model import predict

logger = logging.getLogger("blv")


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


def execute_run(
    command: str,
    resolved: Dict[str, Any],
    out_root: str,
    plot: bool = False,
    show_progress: bool = False,
) -> Dict[str, Any]:
    """Entrena, valida el informe y escribe report.json + model.joblib (+ curves.svg)."""
    exp, result, wall = timed_run(resolved, show_progress=show_progress)
    run_dir = Path(out_root) / f"{command}-{exp.train.seed}-{config_hash(resolved)}"
    report = build_run_report(command, resolved, result, wall, include_debug=exp.train.debug)
    problems = validate_report(report)
    if problems:
        raise BLVError("Informe inválido: " + "; ".join(problems))
    write_json(run_dir / "report.json", report)
    save_artifact(run_dir / ARTIFACT_NAME, result.model, result.coefficients,
                  {"seed": exp.train.seed, "config_hash": config_hash(resolved), "config": resolved})
    if plot:
        plot_curves(run_dir / "curves.svg", result, title=f"{command} · {exp.train.mode.value} · seed {exp.train.seed}")
    return {
        "run_dir": str(run_dir),
        "seed": exp.train.seed,
        "miou": result.metrics.miou,
        "tail_miou": result.metrics.tail_miou,
        "report": report,
    }


def _ablation_cell(cell: Dict[str, Any], out_root: str, plot: bool) -> Dict[str, Any]:
    record = {"axis": cell["axis"], "value": cell["value"], "seed": cell["seed"]}
    try:
        run = execute_run("ablate", cell["resolved"], out_root, plot=plot)
    except Exception as exc:  # el fallo se informa y corta el barrido
        logging.getLogger(__name__).error("Celda %s=%s semilla %s: %s", cell["axis"], cell["value"], cell["seed"], exc)
        record["error"] = f"{type(exc).__name__}: {exc}"
        return record
    record.update({k: run[k] for k in ("run_dir", "miou", "tail_miou")})
    return record


# ----------------------------
# Subcomandos
# ----------------------------

def cmd_freq(args: argparse.Namespace) -> int:
    if not args.paths:
        print("❌ Error: indica al menos un mapa de etiquetas PGM (uso: blv freq MAPA.pgm [...] -C N)")
        return 2
    hist = ClassHistogram.empty(args.num_classes)
    errors: List[str] = []
    for path in args.paths:
        try:
            hist = hist + count_pixels(load_label_map(path, args.ignore_index), args.num_classes, args.ignore_index)
        except PGMParseError as exc:
            errors.append(f"{path}: {exc} [offset={exc.offset}]")
        except (BLVError, OSError) as exc:
            errors.append(f"{path}: {exc}")
    if errors:
        for err in errors:
            print(f"❌ {err}")
        return 1

    freqs = normalize(hist, args.smoothing)
    coeffs = balancing_coefficients(freqs)
    print("=" * 60)
    print(f"[Frecuencias] {len(args.paths)} mapas · {hist.counts.sum():,} píxeles válidos · {hist.ignored:,} ignorados")
    print("=" * 60)
    print(freq_table(hist, freqs, coeffs).to_string(float_format=lambda v: f"{v:.6f}"))
    print(f"\n[Cola] Ranking (más rara primero): {coeffs.tail_ranking()}")

    fragment = freq_fragment(args.paths, hist, freqs, coeffs, args.smoothing, args.ignore_index)
    digest = hashlib.sha256(json.dumps(
        {"files": args.paths, "C": args.num_classes, "ignore": args.ignore_index, "smoothing": args.smoothing},
        sort_keys=True).encode("utf-8")).hexdigest()[:10]
    out_path = write_json(Path(args.out) / f"freq-{digest}" / "freq.json", fragment)
    print(f"\n✓ Guardado en: {out_path}")
    return 0


def _overrides(args: argparse.Namespace) -> List[str]:
    overrides = list(args.set or [])
    if getattr(args, "debug", False):
        overrides.append("train.debug=true")
    return overrides


def cmd_train(args: argparse.Namespace) -> int:
    exp = load_experiment(args.config, _overrides(args), seed=args.seed)
    print(f"[Entrenamiento] modo={exp.train.mode.value} · frecuencias={exp.train.frequency_source.value} · "
          f"semilla={exp.train.seed} · épocas={exp.train.epochs}")
    run = execute_run("train", exp.resolved, args.out, plot=args.plot, show_progress=True)
    metrics = run["report"]["metrics"]
    print("\n" + "=" * 60)
    print("RESULTADOS (evaluación sin ruido)")
    print("=" * 60)
    print(f"   • mIoU: {metrics['miou']:.4f}")
    tail = metrics["tail_miou"]
    print(f"   • tail-mIoU {metrics['tail_classes']}: {'—' if tail is None else f'{tail:.4f}'}")
    print(f"   • IoU por clase: {metrics['per_class_iou']}")
    print(f"\n✓ Informe en: {run['run_dir']}")
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    overrides = _overrides(args)
    if args.seed is not None:
        overrides.append(f"train.seeds=[{args.seed}]")
    exp = load_experiment(args.config, overrides, seed=args.seed)
    values = parse_axis_values(args.axis, args.values)
    cells = ablation_cells(exp, args.axis, values)
    out_dir = Path(args.out) / f"ablate-{args.axis}-{exp.config_hash()}"
    print(f"[Ablación] eje={args.axis} · valores={values} · semillas={list(exp.seeds)} · {len(cells)} ejecuciones")

    records: List[Dict[str, Any]] = []
    failure: Optional[Dict[str, Any]] = None
    parallel = Parallel(n_jobs=args.jobs, return_as="generator")
    for record in parallel(delayed(_ablation_cell)(cell, str(out_dir), args.plot) for cell in cells):
        if "error" in record:
            failure = record
            break
        records.append(record)
        print(f"   ✓ {args.axis}={record['value']} semilla {record['seed']}: "
              f"mIoU {record['miou']:.4f} · tail-mIoU {record['tail_miou']}")

    payload = write_ablation_summary(out_dir, args.axis, records, complete=failure is None)
    print("\n[Resumen] mediana por valor:")
    for row in payload["rows"]:
        print(f"   • {row['value']}: tail-mIoU {row['median_tail_miou']} · mIoU {row['median_miou']} ({row['runs']} ejecuciones)")
    if failure is not None:
        print(f"\n❌ Error en {args.axis}={failure['value']} semilla {failure['seed']}: {failure['error']}")
        print(f"   Resultados parciales en: {out_dir}")
        return 1
    print(f"\n✓ Resumen en: {out_dir / 'summary.csv'}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    exp = load_experiment(args.config, list(args.set or []), seed=args.seed)
    model, _coeffs, meta = load_artifact(args.model)
    eval_set = build_datasets(exp).eval_set
    report = evaluate_predictions(
        predict(model, eval_set.features), eval_set.labels, exp.num_classes,
        exp.train.tail_classes, exp.train.ignore_index,
    )
    print(f"[Evaluación] modelo guardado el {meta.get('saved_at', 'N/A')} (semilla {meta.get('seed', 'N/A')})")
    print(json.dumps(report.to_dict(), indent=2))
    return 0


# ----------------------------
# Parser
# ----------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blv",
        description="Balancing Logit Variation: frecuencias, entrenamiento y ablaciones a escala de escritorio",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Logging en nivel DEBUG")
    sub = parser.add_subparsers(dest="command", required=True)

    p_freq = sub.add_parser("freq", help="Frecuencias y coeficientes de un corpus de mapas PGM")
    p_freq.add_argument("paths", nargs="*", help="Mapas de etiquetas PGM (P5)")
    p_freq.add_argument("-C", "--num-classes", type=int, required=True, help="Número de clases")
    p_freq.add_argument("--ignore-index", type=int, default=255, help="Etiqueta ignorada (default: 255)")
    p_freq.add_argument("--smoothing", type=float, default=1.0, help="Suavizado aditivo por clase (default: 1)")
    p_freq.add_argument("--out", default="runs", help="Directorio de salida (default: runs)")
    p_freq.set_defaults(func=cmd_freq)

    def add_experiment_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="Configuración JSON/YAML del experimento")
        p.add_argument("--out", default="runs", help="Directorio de salida (default: runs)")
        p.add_argument("--seed", type=int, default=None, help="Semilla (default: train.seed o BLV_SEED)")
        p.add_argument("--set", action="append", metavar="CLAVE=VALOR", help="Override con ruta de puntos, p. ej. train.epochs=20")
        p.add_argument("--plot", action="store_true", help="Guardar curves.svg por ejecución")
        p.add_argument("--debug", action="store_true", help="Incluir los logits perturbados del último lote en el informe")

    p_train = sub.add_parser("train", help="Una ejecución de entrenamiento")
    add_experiment_args(p_train)
    p_train.set_defaults(func=cmd_train)

    p_ablate = sub.add_parser("ablate", help="Barrido de ablación sobre un eje")
    add_experiment_args(p_ablate)
    p_ablate.add_argument("--axis", required=True, choices=sorted(ABLATION_AXES), help="Eje de ablación (frequency-source con pseudo-epoch requiere split.labeled_fraction < 1)")
    p_ablate.add_argument("--values", default=None, help="Valores separados por comas (default: los del eje)")
    p_ablate.add_argument("--jobs", type=int, default=1, help="Ejecuciones en paralelo (default: 1)")
    p_ablate.set_defaults(func=cmd_ablate)

    p_eval = sub.add_parser("evaluate", help="Evalúa un model.joblib guardado sobre el conjunto de evaluación")
    p_eval.add_argument("--config", required=True, help="Configuración del experimento")
    p_eval.add_argument("--model", default=None, help="Artefacto (default: BLV_MODEL_PATH)")
    p_eval.add_argument("--seed", type=int, default=None)
    p_eval.add_argument("--set", action="append", metavar="CLAVE=VALOR")
    p_eval.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        print("\n\n⚠️  Ejecución cancelada por el usuario")
        return 1
    except (BLVError, OSError) as exc:
        print(f"❌ Error: {exc}")
        return 1
    except Exception as exc:
        logger.exception("Error crítico: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
