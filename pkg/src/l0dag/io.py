"""File helpers with deterministic formatting.

Floats are written with repr (shortest round-trip form), so re-reading a
file and recomputing any aggregate reproduces the original values exactly,
and identical runs produce identical bytes.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from ._version import __version__
from .simulate import GAUSSIAN_ID


def fmt(value) -> str:
    """Canonical text for one CSV cell."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_matrix_csv(path, matrix) -> None:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    lines = [",".join(fmt(v) for v in row) for row in matrix]
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def canonical_json(obj) -> str:
    """Key-sorted, whitespace-free encoding used for hashing configs."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def build_manifest(config: dict, record_count: int, backend: str, seed) -> dict:
    """Run provenance without timestamps, so reruns are byte-identical."""
    return {
        "package": "l0dag",
        "version": __version__,
        "seed": seed,
        "config_sha256": config_hash(config),
        "backend": backend,
        "gaussian": GAUSSIAN_ID,
        "records": record_count,
    }
