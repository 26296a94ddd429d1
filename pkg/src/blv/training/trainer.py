# -*- coding: utf-8 -*-
"""
Bucles de entrenamiento: supervisado (frecuencias fijas) y self-training con
actualización de la distribución por época a partir de pseudo-labels.
"""
from __future__ import annotations
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from tqdm.auto import tqdm

from ..balancing.histogram import (
    DEFAULT_SMOOTHING,
    BalancingCoefficients,
    ClassHistogram,
    FrequencySource,
    FrequencyVector,
    balancing_coefficients,
    coefficients_from_labels,
    normalize,
    pseudo_label_histogram,
)
from ..balancing.labels import IGNORE_INDEX, LabelBatch
from ..balancing.loss import LossMode, blv_loss
from ..balancing.variation import NoiseSpec, ScheduleMode, SigmaSchedule
from ..data.blobs import Dataset
from ..errors import ConfigError, DegenerateInputError
from ..metrics.iou import MetricsReport, evaluate_predictions
from .model import Model, Params, backward, forward, init_model, predict, sgd_step

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    mode: LossMode = LossMode.BLV
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    schedule: SigmaSchedule = field(default_factory=SigmaSchedule)
    frequency_source: FrequencySource = FrequencySource.GROUND_TRUTH
    epochs: int = 100
    batch_size: int = 64
    learning_rate: float = 0.05
    momentum: float = 0.9
    seed: int = 0
    tail_classes: Tuple[int, ...] = (2,)
    warmup_epochs: int = 1
    hidden_units: int = 0
    init_scale: float = 0.1
    smoothing: float = DEFAULT_SMOOTHING
    ignore_index: int = IGNORE_INDEX
    warmup_uses_blv: bool = True
    include_labeled_counts: bool = False
    no_variation_constant: Union[float, str] = "expected"
    debug: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mode", LossMode(self.mode))
        object.__setattr__(self, "frequency_source", FrequencySource(self.frequency_source))
        object.__setattr__(self, "tail_classes", tuple(int(k) for k in self.tail_classes))
        if self.epochs <= 0:
            raise ConfigError("train.epochs", f"debe ser positivo, no {self.epochs}")
        if self.batch_size <= 0:
            raise ConfigError("train.batch_size", f"debe ser positivo, no {self.batch_size}")
        if not self.learning_rate > 0:
            raise ConfigError("train.learning_rate", f"debe ser positivo, no {self.learning_rate}")
        if not 0 <= self.momentum < 1:
            raise ConfigError("train.momentum", f"debe estar en [0, 1), no {self.momentum}")
        if self.warmup_epochs < 0:
            raise ConfigError("train.warmup_epochs", f"no puede ser negativo ({self.warmup_epochs})")
        if self.hidden_units < 0:
            raise ConfigError("train.hidden_units", f"no puede ser negativo ({self.hidden_units})")
        if self.smoothing < 0:
            raise ConfigError("train.smoothing", f"debe ser >= 0, no {self.smoothing}")
        if isinstance(self.no_variation_constant, str) and self.no_variation_constant != "expected":
            raise ConfigError("train.no_variation_constant", "debe ser 'expected' o un número")


@dataclass
class TrainResult:
    model: Model
    loss_curve: List[float]
    frequency_history: List[FrequencyVector]
    metrics: MetricsReport
    seed: int
    miou_curve: List[float] = field(default_factory=list)
    tail_miou_curve: List[Optional[float]] = field(default_factory=list)
    pseudo_label_histograms: List[Optional[ClassHistogram]] = field(default_factory=list)
    coefficients: Optional[BalancingCoefficients] = None
    iterations: int = 0
    perturbed_logits: Optional[np.ndarray] = None


class BLVTrainer:
    """
    Estado de una ejecución: modelo, velocidad de SGD, contador de iteraciones
    y los tres generadores (inicialización, barajado, ruido), derivados de la
    semilla para que el modo de pérdida no altere el barajado.
    """

    def __init__(self, config: TrainConfig, dims: int, num_classes: int, show_progress: bool = False):
        self.config = config
        self.num_classes = num_classes
        init_seq, shuffle_seq, noise_seq = np.random.SeedSequence(config.seed).spawn(3)
        self.model = init_model(
            dims, num_classes, config.hidden_units, config.init_scale, np.random.default_rng(init_seq)
        )
        self.shuffle_rng = np.random.default_rng(shuffle_seq)
        self.noise_rng = np.random.default_rng(noise_seq)
        self.velocity: Optional[Params] = None
        self.iteration = 0
        self.show_progress = show_progress
        self.last_perturbed: Optional[np.ndarray] = None

        self.loss_curve: List[float] = []
        self.frequency_history: List[FrequencyVector] = []
        self.miou_curve: List[float] = []
        self.tail_miou_curve: List[Optional[float]] = []
        self.pseudo_histograms: List[Optional[ClassHistogram]] = []

        bad = [k for k in config.tail_classes if not 0 <= k < num_classes]
        if bad:
            raise ConfigError("metrics.tail_classes", f"clases {bad} fuera de [0, {num_classes})")

    def check_schedule(self, epoch_sizes: Sequence[int]) -> None:
        """En modo temporal, la última iteración no puede pasar de t_end."""
        schedule = self.config.schedule
        if schedule.mode is not ScheduleMode.TEMPORAL:
            return
        total = sum(math.ceil(n / self.config.batch_size) for n in epoch_sizes)
        if total - 1 > schedule.t_end:
            raise ConfigError(
                "schedule.t_end",
                f"el entrenamiento usa {total} iteraciones y el calendario termina en t_end={schedule.t_end}",
            )

    def run_epoch(self, dataset: Dataset, coeffs: BalancingCoefficients, mode: LossMode) -> float:
        """Una pasada barajada en mini-lotes; devuelve la pérdida media por instancia válida."""
        cfg = self.config
        perm = self.shuffle_rng.permutation(len(dataset))
        total_loss = 0.0
        total_valid = 0
        for start in range(0, perm.size, cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            x = dataset.features[idx]
            y = LabelBatch(dataset.labels[idx], ignore_index=cfg.ignore_index)
            if not y.valid_mask().any():
                continue
            out = blv_loss(
                forward(self.model, x), y, coeffs, cfg.noise, cfg.schedule, self.iteration, mode,
                self.noise_rng, kappa=cfg.no_variation_constant, keep_perturbed=cfg.debug,
            )
            grads = backward(self.model, x, out.grad)
            self.model, self.velocity = sgd_step(self.model, grads, cfg.learning_rate, cfg.momentum, self.velocity)
            self.iteration += 1
            total_loss += out.loss * out.valid_count
            total_valid += out.valid_count
            if cfg.debug:
                self.last_perturbed = out.perturbed_logits
        if total_valid == 0:
            raise DegenerateInputError("La época no contenía ninguna instancia válida")
        return total_loss / total_valid

    def evaluate(self, dataset: Dataset) -> MetricsReport:
        """Métricas sin ruido sobre el conjunto de evaluación."""
        return evaluate_predictions(
            predict(self.model, dataset.features), dataset.labels, self.num_classes,
            self.config.tail_classes, self.config.ignore_index,
        )

    def record(self, loss: float, freqs: FrequencyVector, eval_set: Dataset,
               pseudo_hist: Optional[ClassHistogram] = None) -> MetricsReport:
        report = self.evaluate(eval_set)
        self.loss_curve.append(loss)
        self.frequency_history.append(freqs)
        self.miou_curve.append(report.miou)
        self.tail_miou_curve.append(report.tail_miou)
        self.pseudo_histograms.append(pseudo_hist)
        logger.debug(
            "[Entrenamiento] Época %d: pérdida %.5f, mIoU %.4f, iteración %d",
            len(self.loss_curve), loss, report.miou, self.iteration,
        )
        return report

    def result(self, metrics: MetricsReport, coeffs: BalancingCoefficients) -> TrainResult:
        return TrainResult(
            model=self.model,
            loss_curve=list(self.loss_curve),
            frequency_history=list(self.frequency_history),
            metrics=metrics,
            seed=self.config.seed,
            miou_curve=list(self.miou_curve),
            tail_miou_curve=list(self.tail_miou_curve),
            pseudo_label_histograms=list(self.pseudo_histograms),
            coefficients=coeffs,
            iterations=self.iteration,
            perturbed_logits=self.last_perturbed,
        )

    def epochs(self, start: int = 0):
        return tqdm(
            range(start, self.config.epochs), desc="[Entrenamiento]", leave=False,
            disable=not self.show_progress,
        )


def _num_classes(*datasets: Dataset) -> int:
    return max(ds.num_classes for ds in datasets)


def pseudo_label_frequencies(
    model: Model,
    unlabeled: Dataset,
    num_classes: int,
    ignore_index: int = IGNORE_INDEX,
    smoothing: float = DEFAULT_SMOOTHING,
    extra_labels: Sequence[np.ndarray] = (),
) -> Tuple[np.ndarray, ClassHistogram, FrequencyVector]:
    """
    Pseudo-labels argmax (sin umbral de confianza) y la distribución resultante.

    `extra_labels` permite sumar al conteo etiquetas reales (p. ej. las etiquetadas).
    """
    pseudo = predict(model, unlabeled.features)
    hist = pseudo_label_histogram([pseudo, *extra_labels], num_classes, ignore_index)
    return pseudo, hist, normalize(hist, smoothing)


def train(
    config: TrainConfig,
    labeled: Dataset,
    eval_set: Dataset,
    source: Optional[Dataset] = None,
    show_progress: bool = False,
) -> TrainResult:
    """
    Entrenamiento supervisado con frecuencias fijadas antes de empezar.

    Con frequency_source=source-proxy las frecuencias salen de `source`
    (dominio origen); si no se pasa, de `labeled`.
    """
    if config.frequency_source not in (FrequencySource.GROUND_TRUTH, FrequencySource.SOURCE_PROXY):
        raise ConfigError(
            "train.frequency_source",
            f"train() admite ground-truth o source-proxy, no {config.frequency_source.value}",
        )
    if len(labeled) == 0:
        raise DegenerateInputError("Conjunto de entrenamiento vacío")
    C = _num_classes(labeled, eval_set)
    freq_source = source if (source is not None and config.frequency_source is FrequencySource.SOURCE_PROXY) else labeled
    hist, freqs, coeffs = coefficients_from_labels(freq_source.labels, C, config.ignore_index, config.smoothing)
    logger.info("[Frecuencias] Conteos %s -> coeficientes %s", hist.counts.tolist(), np.round(coeffs.coeffs, 5).tolist())

    trainer = BLVTrainer(config, labeled.dims, C, show_progress)
    trainer.check_schedule([len(labeled)] * config.epochs)
    metrics = None
    for _ in trainer.epochs():
        loss = trainer.run_epoch(labeled, coeffs, config.mode)
        metrics = trainer.record(loss, freqs, eval_set)
    logger.info("[Entrenamiento] ✓ %d épocas, mIoU %.4f, tail-mIoU %s", config.epochs, metrics.miou, metrics.tail_miou)
    return trainer.result(metrics, coeffs)


def self_train(
    config: TrainConfig,
    labeled: Dataset,
    unlabeled: Dataset,
    eval_set: Dataset,
    source: Optional[Dataset] = None,
    show_progress: bool = False,
) -> TrainResult:
    """
    Self-training con pseudo-labels.

    1. Calentamiento `warmup_epochs` épocas sobre las etiquetadas, con
       frecuencias de sus conteos.
    2. Cada época siguiente: pseudo-labels argmax sin ruido sobre todo el
       conjunto sin etiquetar; en pseudo-epoch se recalcula la distribución
       con ellos; después una época sobre etiquetadas + pseudo-etiquetadas
       mezcladas uniformemente.

    labeled-only y source-proxy mantienen fija la distribución inicial (en
    source-proxy, la de `source` si se pasa).
    """
    src = config.frequency_source
    if src is FrequencySource.GROUND_TRUTH:
        raise ConfigError("train.frequency_source", "self_train() necesita pseudo-epoch, labeled-only o source-proxy")
    if config.warmup_epochs < 1:
        raise ConfigError("train.warmup_epochs", "self-training necesita al menos una época de calentamiento")
    if config.warmup_epochs > config.epochs:
        raise ConfigError("train.warmup_epochs", f"({config.warmup_epochs}) mayor que train.epochs ({config.epochs})")
    if len(labeled) == 0:
        raise DegenerateInputError("Subconjunto etiquetado vacío")
    if src is FrequencySource.PSEUDO_EPOCH and len(unlabeled) == 0:
        raise DegenerateInputError("pseudo-epoch necesita datos sin etiquetar")

    C = _num_classes(labeled, unlabeled, eval_set)
    base = source if (source is not None and src is FrequencySource.SOURCE_PROXY) else labeled
    _, freqs, coeffs = coefficients_from_labels(base.labels, C, config.ignore_index, config.smoothing)

    trainer = BLVTrainer(config, labeled.dims, C, show_progress)
    mixed_size = len(labeled) + len(unlabeled)
    trainer.check_schedule([len(labeled)] * config.warmup_epochs + [mixed_size] * (config.epochs - config.warmup_epochs))

    warmup_mode = config.mode if config.warmup_uses_blv else LossMode.PLAIN_CE
    metrics = None
    for epoch in trainer.epochs():
        if epoch < config.warmup_epochs:
            loss = trainer.run_epoch(labeled, coeffs, warmup_mode)
            metrics = trainer.record(loss, freqs, eval_set)
            continue

        pseudo_hist = None
        if len(unlabeled):
            extra = [labeled.labels] if config.include_labeled_counts else []
            pseudo, pseudo_hist, epoch_freqs = pseudo_label_frequencies(
                trainer.model, unlabeled, C, config.ignore_index, config.smoothing, extra,
            )
            if src is FrequencySource.PSEUDO_EPOCH:
                freqs = epoch_freqs
                coeffs = balancing_coefficients(freqs)
                logger.debug("[Frecuencias] Época %d: %s", epoch + 1, np.round(freqs.freqs, 5).tolist())
            train_set = labeled.concat(unlabeled.with_labels(pseudo))
        else:
            train_set = labeled
        loss = trainer.run_epoch(train_set, coeffs, config.mode)
        metrics = trainer.record(loss, freqs, eval_set, pseudo_hist)

    logger.info("[Self-training] ✓ %d épocas (%d de calentamiento), mIoU %.4f", config.epochs, config.warmup_epochs, metrics.miou)
    return trainer.result(metrics, coeffs)


__all__ = ["TrainConfig", "TrainResult", "BLVTrainer", "pseudo_label_frequencies", "train", "self_train"]
