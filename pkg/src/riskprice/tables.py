"""Delimited result files: ``#``-prefixed metadata lines, a header row, then rows.

Floats are written with 17 significant digits so that re-parsing recovers
every value exactly.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Mapping

import numpy as np


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    return format(v, ".17g")


def write_table(path, columns: Mapping[str, np.ndarray], metadata: Mapping[str, object] = ()) -> Path:
    path = Path(path)
    names = list(columns)
    data = [np.asarray(columns[k]) for k in names]
    lengths = {len(c) for c in data}
    if len(lengths) > 1:
        raise ValueError(f"columns have different lengths: {dict(zip(names, map(len, data)))}")
    lines = [f"# {k}: {v}" for k, v in dict(metadata).items()]
    lines.append(",".join(names))
    for row in zip(*data):
        lines.append(",".join(format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_table(path) -> tuple[dict, dict]:
    """Return ``(metadata, columns)``; metadata values stay strings."""
    metadata, header, rows = {}, None, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(":")
            metadata[key.strip()] = value.strip()
        elif header is None:
            header = line.split(",")
        elif line:
            rows.append([float(v) for v in line.split(",")])
    if header is None:
        raise ValueError(f"{path}: no header row")
    arr = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return metadata, {name: arr[:, i] for i, name in enumerate(header)}
