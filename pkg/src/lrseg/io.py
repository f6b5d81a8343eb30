"""Artifact writers: CSV tables, field dumps, graymaps and JSON reports.

All writers are byte-deterministic: floats use 17 significant digits,
JSON keys are sorted and rows are emitted in a fixed order.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

FLOAT_FMT = "{:.17g}"


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT.format(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r]


def write_field_csv(path, field, mask):
    """Dump ``field`` on the ``mask`` cells as ``i,j[,k],value`` in row-major order."""
    idx = np.argwhere(mask)  # argwhere is row-major
    vals = field[mask]
    names = ["i", "j", "k"][:field.ndim]
    rows = (list(map(int, c)) + [float(v)] for c, v in zip(idx, vals))
    return write_csv(path, names + ["value"], rows)


def read_field_csv(path, shape):
    header, rows = read_csv(path)
    n = len(header) - 1
    out = np.zeros(shape)
    for row in rows:
        out[tuple(int(v) for v in row[:n])] = float(row[n])
    return out


def write_pgm(path, field):
    """8-bit binary graymap of a 2D field; first array axis is horizontal.

    Values are scaled by the field maximum (returned) so the maximum maps
    to 255. The image is flipped so the second axis points up.
    """
    f = np.asarray(field, dtype=float)
    if f.ndim != 2:
        raise ValueError("graymaps are only written for 2D fields")
    scale = float(f.max()) if f.size and f.max() > 0 else 1.0
    img = np.clip(np.rint(f / scale * 255.0), 0, 255).astype(np.uint8)
    img = img.T[::-1]
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
    return scale


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        seq = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [_jsonable(v) for v in seq]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_json(path, obj):
    path = Path(path)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
