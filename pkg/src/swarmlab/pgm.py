"""Portable GrayMap reading and writing.

Fields and cognitive maps are exported as ASCII PGM (P2); image habitats
are ingested from either ASCII (P2) or binary (P5) files with a maxval
of at most 255.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .grid import PheromoneField, TorusDims


def write_pgm(grey: np.ndarray, path: str | os.PathLike) -> None:
    """Write a 2D array of grey levels (0..255) as ASCII P2."""
    grey = np.asarray(grey)
    if grey.ndim != 2:
        raise ValueError(f"expected a 2D array, got shape {grey.shape}")
    if grey.min() < 0 or grey.max() > 255:
        raise ValueError("grey levels must lie in 0..255")
    height, width = grey.shape
    lines = [f"P2", f"{width} {height}", "255"]
    for row in grey.astype(int):
        lines.append(" ".join(str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def field_to_grey(f: PheromoneField) -> np.ndarray:
    """Scale a field linearly so its maximum maps to 255.

    An all-zero field maps to all zeros.
    """
    m = f.values.max()
    if m <= 0:
        return np.zeros_like(f.values, dtype=np.int64)
    return np.rint(f.values / m * 255.0).astype(np.int64)


def write_field_pgm(f: PheromoneField, path: str | os.PathLike) -> None:
    write_pgm(field_to_grey(f), path)


def read_pgm(path: str | os.PathLike) -> np.ndarray:
    """Read a P2 or P5 PGM into a 2D int array of grey levels 0..255."""
    data = Path(path).read_bytes()
    if data[:2] == b"P2":
        return _read_ascii(data)
    if data[:2] == b"P5":
        return _read_binary(data)
    raise ValueError(f"{path}: not a P2/P5 PGM (magic {data[:2]!r})")


def _strip_comments(text: str) -> list[str]:
    tokens = []
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        tokens.extend(line.split())
    return tokens


def _read_ascii(data: bytes) -> np.ndarray:
    tokens = _strip_comments(data.decode("ascii"))
    if len(tokens) < 4:
        raise ValueError("truncated PGM header")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    _check_header(width, height, maxval)
    values = np.array([int(t) for t in tokens[4:]], dtype=np.int64)
    return _shape_values(values, width, height, maxval)


def _read_binary(data: bytes) -> np.ndarray:
    # Header is ASCII tokens (magic, width, height, maxval), possibly with
    # comments, followed by a single whitespace byte and raw pixel bytes.
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PGM header")
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    _check_header(width, height, maxval)
    values = np.frombuffer(data[pos : pos + width * height], dtype=np.uint8).astype(np.int64)
    return _shape_values(values, width, height, maxval)


def _check_header(width: int, height: int, maxval: int) -> None:
    if width < 1 or height < 1:
        raise ValueError(f"bad PGM dimensions {width}x{height}")
    if not 1 <= maxval <= 255:
        raise ValueError(f"unsupported PGM maxval {maxval} (need 1..255)")


def _shape_values(values: np.ndarray, width: int, height: int, maxval: int) -> np.ndarray:
    if values.size != width * height:
        raise ValueError(f"PGM pixel count {values.size} != {width}x{height}")
    if values.min() < 0 or values.max() > maxval:
        raise ValueError("PGM pixel outside 0..maxval")
    return values.reshape(height, width)


def grey_dims(grey: np.ndarray) -> TorusDims:
    height, width = grey.shape
    return TorusDims(width=width, height=height)
