from __future__ import annotations
import os
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import joblib

from ..balancing.histogram import BalancingCoefficients
from ..training.model import Model

MODEL_ENV = "BLV_MODEL_PATH"
ARTIFACT_NAME = "model.joblib"

# src/blv/models/loader.py -> raíz del repo
_PROJECT_ROOT = Path(__file__).resolve().parents[3]


def resolve_model_path(path: Path | str | None = None) -> Path:
    """Ruta explícita > BLV_MODEL_PATH > runs/latest/model.joblib."""
    if path:
        return Path(path)
    from_env = os.getenv(MODEL_ENV)
    if from_env:
        return Path(from_env).expanduser().resolve()
    return _PROJECT_ROOT / "runs" / "latest" / ARTIFACT_NAME


def save_artifact(path: Path | str, model: Model, coeffs: Optional[BalancingCoefficients],
                  metadata: Optional[Dict[str, Any]] = None) -> Path:
    """
    Guarda modelo, coeficientes finales y metadatos en un único .joblib.
    Los coeficientes son informativos: la inferencia no usa variación.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    joblib.dump({
        "model": model,
        "coefficients": coeffs,
        "metadata": {"saved_at": datetime.now().strftime("%Y-%m-%d %H:%M:%S"), **(metadata or {})},
    }, path)
    return path


def load_artifact(path: Path | str | None = None) -> Tuple[Model, Optional[BalancingCoefficients], Dict]:
    """
    Devuelve (modelo, coeficientes de balanceo o None, metadata).
    """
    artifact = resolve_model_path(path)
    data = joblib.load(artifact)
    model = data.get("model")
    if not isinstance(model, Model):
        raise ValueError(f"{artifact} no contiene un modelo blv")
    return model, data.get("coefficients"), data.get("metadata", {})


__all__ = ["MODEL_ENV", "ARTIFACT_NAME", "resolve_model_path", "save_artifact", "load_artifact"]
