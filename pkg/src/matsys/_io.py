"""Small serialization helpers shared by reports and the command line tool."""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .errors import DimensionMismatch


def matrix_to_pairs(a: np.ndarray) -> list:
    """Row-major nesting with each entry encoded as an [re, im] pair."""
    a = np.asarray(a, dtype=complex)
    return [[[float(x.real), float(x.imag)] for x in row] for row in a]


def matrix_from_pairs(data) -> np.ndarray:
    try:
        rows = [[complex(float(e[0]), float(e[1])) for e in row] for row in data]
    except (TypeError, IndexError, ValueError) as exc:
        raise DimensionMismatch(f"matrix entries must be [re, im] pairs: {exc}") from exc
    a = np.array(rows, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    return a


def atomic_write_text(path: str, text: str) -> None:
    """Write via a temp file in the same directory, then rename."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_json(path: str, payload) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
