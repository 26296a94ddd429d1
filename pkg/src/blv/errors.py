# -*- coding: utf-8 -*-
"""
Errores del paquete blv.

Todos heredan de ValueError para que el código que ya capturaba ValueError
(como hacía el entrenador original) siga funcionando.
"""
from __future__ import annotations
from typing import Optional


class BLVError(ValueError):
    """Raíz de los errores de entrada del paquete."""


class LabelRangeError(BLVError):
    def __init__(self, position: int, value: int, num_classes: int, ignore_index: int):
        self.position = int(position)
        self.value = int(value)
        super().__init__(
            f"Etiqueta fuera de rango en la posición {self.position}: {self.value} "
            f"(clases válidas [0, {num_classes}) o ignore_index={ignore_index})"
        )


class DegenerateInputError(BLVError):
    """Entrada vacía o sin información suficiente (p. ej. histograma todo ceros)."""


class ShapeMismatchError(BLVError):
    pass


class ScheduleError(BLVError):
    pass


class PGMParseError(BLVError):
    def __init__(self, message: str, offset: int):
        self.offset = int(offset)
        super().__init__(f"{message} (byte {self.offset})")


class ConfigError(BLVError):
    def __init__(self, key: str, message: str, source: Optional[str] = None):
        self.key = key
        where = f"{source}: " if source else ""
        super().__init__(f"{where}{key}: {message}")


__all__ = [
    "BLVError", "LabelRangeError", "DegenerateInputError", "ShapeMismatchError",
    "ScheduleError", "PGMParseError", "ConfigError",
]
