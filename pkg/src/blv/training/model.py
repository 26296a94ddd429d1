# -*- coding: utf-8 -*-
"""
Clasificador softmax pequeño con gradientes derivados a mano.

Parámetros como dict de arrays:
    lineal:  {"W": (dims, C), "b": (C,)}
    oculta:  {"W1": (dims, H), "b1": (H,), "W2": (H, C), "b2": (C,)}  con tanh
"""
from __future__ import annotations
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from ..errors import ShapeMismatchError

Params = Dict[str, np.ndarray]


@dataclass
class Model:
    params: Params
    dims: int
    num_classes: int
    hidden_units: int = 0

    @property
    def has_hidden(self) -> bool:
        return self.hidden_units > 0

    def copy(self) -> "Model":
        return Model({k: v.copy() for k, v in self.params.items()}, self.dims, self.num_classes, self.hidden_units)


def init_model(
    dims: int,
    num_classes: int,
    hidden_units: int = 0,
    init_scale: float = 0.1,
    rng: Optional[np.random.Generator] = None,
) -> Model:
    rng = rng if rng is not None else np.random.default_rng(0)
    if hidden_units > 0:
        params = {
            "W1": init_scale * rng.standard_normal((dims, hidden_units)),
            "b1": np.zeros(hidden_units),
            "W2": init_scale * rng.standard_normal((hidden_units, num_classes)),
            "b2": np.zeros(num_classes),
        }
    else:
        params = {
            "W": init_scale * rng.standard_normal((dims, num_classes)),
            "b": np.zeros(num_classes),
        }
    return Model(params, dims, num_classes, hidden_units)


def _check_features(model: Model, features: np.ndarray) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.dims:
        raise ShapeMismatchError(f"Características {x.shape} para un modelo de {model.dims} dimensiones")
    return x


def _forward_cache(model: Model, x: np.ndarray) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    p = model.params
    if model.has_hidden:
        h = np.tanh(x @ p["W1"] + p["b1"])
        return h @ p["W2"] + p["b2"], h
    return x @ p["W"] + p["b"], None


def forward(model: Model, features: np.ndarray) -> np.ndarray:
    """Logits deterministas. Nunca añade variación: es el camino de inferencia."""
    logits, _ = _forward_cache(model, _check_features(model, features))
    return logits


def predict(model: Model, features: np.ndarray) -> np.ndarray:
    return forward(model, features).argmax(axis=1)


def backward(model: Model, features: np.ndarray, loss_grad: np.ndarray) -> Params:
    """
    Gradientes exactos respecto a cada parámetro.

    `loss_grad` es d(loss)/d(logits) ya promediado (sale de blv_loss), así que
    aquí solo se suman contribuciones por muestra.
    """
    x = _check_features(model, features)
    g = np.asarray(loss_grad, dtype=np.float64)
    if g.shape != (x.shape[0], model.num_classes):
        raise ShapeMismatchError(f"Gradiente {g.shape}, se esperaba {(x.shape[0], model.num_classes)}")
    p = model.params
    if not model.has_hidden:
        return {"W": x.T @ g, "b": g.sum(axis=0)}
    _, h = _forward_cache(model, x)
    dh = (g @ p["W2"].T) * (1.0 - h ** 2)
    return {
        "W1": x.T @ dh,
        "b1": dh.sum(axis=0),
        "W2": h.T @ g,
        "b2": g.sum(axis=0),
    }


def sgd_step(
    model: Model,
    grads: Params,
    lr: float,
    momentum: float = 0.0,
    velocity: Optional[Params] = None,
) -> Tuple[Model, Params]:
    """
    v <- momentum * v + g ;  theta <- theta - lr * v

    Devuelve un modelo y una velocidad nuevos; no modifica los de entrada.
    """
    if lr < 0:
        raise ValueError(f"lr debe ser >= 0, no {lr}")
    if set(grads) != set(model.params):
        raise ShapeMismatchError(f"Gradientes {sorted(grads)} frente a parámetros {sorted(model.params)}")
    velocity = velocity or {k: np.zeros_like(v) for k, v in model.params.items()}
    new_velocity = {k: momentum * velocity[k] + grads[k] for k in model.params}
    new_params = {k: model.params[k] - lr * new_velocity[k] for k in model.params}
    return Model(new_params, model.dims, model.num_classes, model.hidden_units), new_velocity


__all__ = ["Params", "Model", "init_model", "forward", "predict", "backward", "sgd_step"]
