"""On-disk formats.

A trajectory directory holds ``meta.json`` and dense CSV matrices
(``X.csv``, ``Xplus.csv`` and, when known, ``U_true.csv``, ``A.csv``,
``B.csv``). A solve directory holds ``report.json``, ``A_star.csv``,
``B_star.csv`` and ``U_star.csv``. CSV values are written with Python's
shortest round-trip float repr, so loading returns bit-identical arrays.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .lti import SystemRealization, TrajectoryData

__all__ = [
    "write_matrix",
    "read_matrix",
    "matrix_to_csv",
    "write_json",
    "read_json",
    "save_trajectory",
    "load_trajectory",
    "save_solve",
]


def _format_row(row):
    return ",".join(repr(float(x)) for x in row)


def matrix_to_csv(M) -> str:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return "".join(_format_row(r) + "\n" for r in M)


def write_matrix(path, M):
    path = Path(path)
    try:
        path.write_text(matrix_to_csv(M))
    except OSError as exc:
        raise OSError(f"could not write matrix to {path}: {exc}") from exc


def read_matrix(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"could not read matrix from {path}: {exc}") from exc
    rows = [line for line in text.splitlines() if line.strip()]
    if not rows:
        return np.zeros((0, 0))
    return np.array([[float(x) for x in r.split(",")] for r in rows])


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def write_json(path, obj):
    path = Path(path)
    try:
        path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")
    except OSError as exc:
        raise OSError(f"could not write {path}: {exc}") from exc


def read_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise OSError(f"could not read {path}: {exc}") from exc


def save_trajectory(directory, data: TrajectoryData, system: SystemRealization = None):
    d = Path(directory)
    os.makedirs(d, exist_ok=True)
    write_matrix(d / "X.csv", data.X)
    write_matrix(d / "Xplus.csv", data.Xplus)
    if data.U_true is not None:
        write_matrix(d / "U_true.csv", data.U_true)
    if system is not None:
        write_matrix(d / "A.csv", system.A)
        write_matrix(d / "B.csv", system.B)
    meta = dict(data.meta)
    meta.setdefault("n", data.n)
    meta.setdefault("T", data.T)
    meta["has_truth"] = system is not None
    write_json(d / "meta.json", meta)
    return d


def load_trajectory(directory):
    """Return ``(data, system)``; ``system`` is None when A/B were not saved."""
    d = Path(directory)
    meta = read_json(d / "meta.json")
    X = read_matrix(d / "X.csv")
    Xplus = read_matrix(d / "Xplus.csv")
    n = int(meta.get("n", X.shape[1]))
    X = X.reshape(-1, n)
    Xplus = Xplus.reshape(n, -1)
    U = None
    if (d / "U_true.csv").exists():
        U = read_matrix(d / "U_true.csv").reshape(X.shape[0], -1)
    system = None
    if (d / "A.csv").exists() and (d / "B.csv").exists():
        A = read_matrix(d / "A.csv").reshape(n, n)
        B = read_matrix(d / "B.csv").reshape(n, -1)
        system = SystemRealization(A, B, seed=meta.get("system_seed"))
    return TrajectoryData(X, Xplus, U, meta), system


def save_solve(directory, report, config: dict = None):
    d = Path(directory)
    os.makedirs(d, exist_ok=True)
    write_matrix(d / "A_star.csv", report.A_star)
    write_matrix(d / "B_star.csv", report.B_star)
    write_matrix(d / "U_star.csv", report.U_star)
    out = report.to_dict()
    if config is not None:
        out["config"] = config
    write_json(d / "report.json", out)
    return d
