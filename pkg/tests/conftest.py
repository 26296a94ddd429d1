import json

import numpy as np
import pytest

from blv.data.blobs import Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def separable():
    """Dos grupos lejanos: linealmente separables."""
    gen = np.random.default_rng(7)
    a = gen.normal([-3.0, 0.0], 0.3, size=(40, 2))
    b = gen.normal([3.0, 0.0], 0.3, size=(40, 2))
    return Dataset(np.vstack([a, b]), np.array([0] * 40 + [1] * 40), 2)


@pytest.fixture
def small_config():
    """Configuración mínima y rápida (unas décimas de segundo por ejecución)."""
    return {
        "dataset": {"counts": [120, 30, 8], "seed": 3},
        "noise": {"family": "gaussian", "sigma": 6.0},
        "train": {"mode": "blv", "epochs": 4, "batch_size": 32, "seed": 0, "seeds": [0, 1]},
        "metrics": {"tail_classes": [2]},
    }


@pytest.fixture
def write_config(tmp_path):
    def _write(mapping, name="cfg.json"):
        path = tmp_path / name
        path.write_text(json.dumps(mapping), encoding="utf-8")
        return path
    return _write
