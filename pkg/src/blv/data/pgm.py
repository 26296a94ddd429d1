# -*- coding: utf-8 -*-
"""
Mapas de etiquetas en PGM binario (P5), un byte por píxel.

Encabezado: "P5", ancho, alto y maxval separados por espacios en blanco;
se permiten comentarios '#' hasta fin de línea. Tras maxval va exactamente
un carácter de espacio en blanco y luego ancho*alto bytes fila a fila.
"""
from __future__ import annotations
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from ..balancing.labels import IGNORE_INDEX, LabelBatch
from ..errors import PGMParseError

_WHITESPACE = b" \t\r\n\v\f"


def _next_token(data: bytes, pos: int) -> Tuple[bytes, int, int]:
    """Devuelve (token, inicio, posición tras el token) saltando blancos y comentarios."""
    n = len(data)
    while pos < n:
        ch = data[pos:pos + 1]
        if ch in _WHITESPACE and ch:
            pos += 1
        elif ch == b"#":
            end = data.find(b"\n", pos)
            pos = n if end < 0 else end + 1
        else:
            break
    start = pos
    while pos < n and data[pos:pos + 1] not in _WHITESPACE and data[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise PGMParseError("Encabezado PGM incompleto", start)
    return data[start:pos], start, pos


def _header_int(data: bytes, pos: int, name: str) -> Tuple[int, int, int]:
    """(valor, inicio del token, posición tras el token)"""
    token, start, pos = _next_token(data, pos)
    if not token.isdigit():
        raise PGMParseError(f"{name} no es un entero: {token!r}", start)
    return int(token), start, pos


def read_label_map(data: bytes, ignore_index: int = IGNORE_INDEX) -> LabelBatch:
    if data[:2] != b"P5":
        raise PGMParseError(f"Número mágico inválido {data[:2]!r}, se esperaba b'P5'", 0)
    pos = 2
    if pos >= len(data) or data[pos:pos + 1] not in _WHITESPACE:
        raise PGMParseError("Falta espacio en blanco tras el número mágico", pos)

    width, width_start, pos = _header_int(data, pos, "ancho")
    height, _, pos = _header_int(data, pos, "alto")
    maxval, maxval_start, pos = _header_int(data, pos, "maxval")
    if width <= 0 or height <= 0:
        raise PGMParseError(f"Dimensiones no positivas {width}x{height}", width_start)
    if not 0 < maxval <= 255:
        raise PGMParseError(f"maxval={maxval} fuera de [1, 255] (solo un byte por píxel)", maxval_start)
    if pos >= len(data) or data[pos:pos + 1] not in _WHITESPACE:
        raise PGMParseError("Falta el separador entre encabezado y datos", pos)
    pos += 1

    expected = width * height
    payload = data[pos:pos + expected]
    if len(payload) < expected:
        raise PGMParseError(f"Datos truncados: {len(payload)} de {expected} bytes", pos + len(payload))
    labels = np.frombuffer(payload, dtype=np.uint8).astype(np.int64)
    return LabelBatch(labels, ignore_index=ignore_index, shape=(height, width))


def write_label_map(batch: LabelBatch) -> bytes:
    """Serialización canónica: 'P5\\n<ancho> <alto>\\n255\\n' + datos."""
    labels = np.asarray(batch.labels)
    if labels.size and (labels.min() < 0 or labels.max() > 255):
        raise ValueError("Las etiquetas de un PGM de 8 bits deben estar en [0, 255]")
    height, width = batch.shape if batch.shape is not None else (1, labels.size)
    if height * width != labels.size:
        raise ValueError(f"Forma {batch.shape} incompatible con {labels.size} etiquetas")
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    return header + labels.astype(np.uint8).tobytes()


def load_label_map(path: Union[str, Path], ignore_index: int = IGNORE_INDEX) -> LabelBatch:
    return read_label_map(Path(path).read_bytes(), ignore_index)


def save_label_map(path: Union[str, Path], batch: LabelBatch) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(write_label_map(batch))
    return path


__all__ = ["read_label_map", "write_label_map", "load_label_map", "save_label_map"]
