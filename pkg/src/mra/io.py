"""CSV and JSON helpers. Floats are written with 17 significant digits;
header comment lines starting with ``#`` carry provenance."""
from __future__ import annotations

import csv
import json
import os

import numpy as np


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path, header, rows, meta: dict | None = None):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        for k, v in (meta or {}).items():
            fh.write(f"# {k}: {v}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_table(path) -> tuple:
    """Returns ``(header or None, float array)``, skipping ``#`` lines."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.startswith("#")]
    rows = list(csv.reader(lines))
    header = None
    if rows:
        try:
            [float(v) for v in rows[0]]
        except ValueError:
            header, rows = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in rows], dtype=float)
    return header, data.reshape(len(rows), -1) if rows else np.empty((0, 0))


def read_locations(path, dim: int, with_values: bool = True) -> tuple:
    """Coordinates in the first ``dim`` columns, optional value after them."""
    _, data = read_table(path)
    if data.size == 0:
        return np.empty((0, dim)), (np.empty(0) if with_values else None)
    locs = data[:, :dim]
    vals = data[:, dim] if with_values and data.shape[1] > dim else None
    return locs, vals


def write_json(path, obj):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o))
