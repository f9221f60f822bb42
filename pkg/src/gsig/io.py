"""CSV and JSON readers/writers used by the command line."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import InputError
from .graph import Graph, graph_from_edge_list
from .kernels import Kernel, kernel_from_dict

EDGE_HEADER = ["i", "j", "w"]


def _open(path, mode="r"):
    p = Path(path)
    if "r" in mode and not p.is_file():
        raise InputError(f"{p}: no such file")
    return p.open(mode, newline="")


def read_edge_list(path, n: int | None = None) -> Graph:
    """Edge list with header ``i,j,w``; ``n`` defaults to the largest index + 1."""
    edges = []
    with _open(path) as fh:
        rows = csv.reader(fh)
        header = next(rows, None)
        if header is None or [h.strip() for h in header] != EDGE_HEADER:
            raise InputError(f"{path}: line 1: expected header 'i,j,w', got {header!r}")
        for lineno, row in enumerate(rows, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise InputError(f"{path}: line {lineno}: expected 3 fields, got {len(row)}")
            try:
                i, j, w = int(row[0]), int(row[1]), float(row[2])
            except ValueError:
                raise InputError(f"{path}: line {lineno}: cannot parse {','.join(row)!r}") from None
            edges.append((i, j, w))
    if n is None:
        n = 1 + max((max(i, j) for i, j, _ in edges), default=-1)
    return graph_from_edge_list(n, edges)


def write_edge_list(path, g: Graph) -> None:
    i, j, w = g.edge_arrays
    with _open(path, "w") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(EDGE_HEADER)
        for a, b, c in zip(i, j, w):
            wr.writerow([int(a), int(b), repr(float(c))])


def read_matrix(path) -> np.ndarray:
    """Headerless numeric CSV as a 2-D array (one row per line)."""
    rows = []
    with _open(path) as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise InputError(f"{path}: line {lineno}: non-numeric entry in {','.join(row)!r}") from None
            if rows and len(vals) != len(rows[0]):
                raise InputError(f"{path}: line {lineno}: expected {len(rows[0])} columns, got {len(vals)}")
            if not np.all(np.isfinite(vals)):
                raise InputError(f"{path}: line {lineno}: non-finite value")
            rows.append(vals)
    if not rows:
        raise InputError(f"{path}: empty matrix")
    return np.array(rows)


def write_matrix(path, X) -> None:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    with _open(path, "w") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        for row in X:
            wr.writerow([repr(float(v)) for v in row])


def read_json(path_or_text) -> dict:
    """JSON from a file path, or inline JSON text when it starts with ``{``."""
    text = str(path_or_text)
    if text.lstrip().startswith("{"):
        src = "inline JSON"
    else:
        src = text
        with _open(text) as fh:
            text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{src}: line {e.lineno}: {e.msg}") from None


def write_json(path, obj) -> None:
    with _open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def read_kernel(path_or_text) -> Kernel:
    return kernel_from_dict(read_json(path_or_text))
