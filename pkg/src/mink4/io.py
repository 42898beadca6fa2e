"""Deterministic text output: CSV tables, OBJ meshes and JSON reports."""

import json
import math
import os

import numpy as np

from .errors import IoError

__all__ = ["fmt", "write_csv", "write_obj", "write_json", "dumps_json", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1


def fmt(x):
    """17 significant digits, enough to round-trip any float64."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _open(path):
    try:
        return open(path, "w", newline="")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def write_csv(path, header, rows):
    rows = np.asarray(rows, dtype=float)
    with _open(path) as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(fmt(x) for x in r) + "\n")


def write_obj(path, positions):
    """Quad mesh of a lattice (nu, nv, 4): vertices (x1, x2, x3), x4 sidecar.

    The sidecar ``<path without .obj>.x4.csv`` holds one x4 value per vertex
    in vertex order.
    """
    positions = np.asarray(positions, dtype=float)
    nu, nv = positions.shape[:2]
    flat = positions.reshape(-1, 4)
    with _open(path) as fh:
        for p in flat:
            fh.write("v " + " ".join(fmt(x) for x in p[:3]) + "\n")
        for i in range(nu - 1):
            for j in range(nv - 1):
                a = i * nv + j + 1
                fh.write(f"f {a} {a + nv} {a + nv + 1} {a + 1}\n")
    root = path[:-4] if path.endswith(".obj") else path
    sidecar = root + ".x4.csv"
    write_csv(sidecar, ["x4"], flat[:, 3:4])
    return sidecar


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else fmt(x)
    return obj


def dumps_json(report):
    """Sorted-key JSON with a schema version; floats printed by repr."""
    doc = {"schema_version": SCHEMA_VERSION}
    doc.update(_clean(report))
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_json(path, report):
    text = dumps_json(report)
    if path in (None, "-"):
        return text
    d = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(d):
        raise IoError(f"cannot write {path}: no such directory")
    with _open(path) as fh:
        fh.write(text)
    return text
