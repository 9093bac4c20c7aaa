"""Deterministic JSON/CSV report writers."""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            if np.all(obj.imag == 0):
                return to_jsonable(obj.real)
            return to_jsonable(np.stack([obj.real, obj.imag], axis=-1))
        return obj.tolist()
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def canonical(doc) -> str:
    return json.dumps(to_jsonable(doc), sort_keys=True, indent=2, allow_nan=False)


def with_digest(doc: dict) -> dict:
    """Attach ``digest``: SHA-256 of the canonical JSON of everything else."""
    body = {k: v for k, v in doc.items() if k != "digest"}
    return {**body, "digest": hashlib.sha256(canonical(body).encode()).hexdigest()}


def write_json(path, doc: dict) -> Path:
    path = Path(path)
    path.write_text(canonical(with_digest(doc)) + "\n")
    return path


def write_csv(path, header, rows, gnuplot: bool = False) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if gnuplot:
            fh.write("# " + " ".join(header) + "\n")
        else:
            w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return path
