"""File formats: decay-matrix CSV, DOT relations, growth and sweep CSV, JSON reports."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .coarse.graphs import connected_profile
from .coarse.structures import DecayMatrix, GrowthCurve, Relation, SiteSet, build_decay_matrix
from .errors import CoarseMapError, ParseError

SCHEMA = "coarsemap/1"
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")

PathLike = Union[str, Path]


def format_value(x: float) -> str:
    """17 significant digits: enough for ``float(format_value(x)) == x``."""
    return format(float(x), ".17g")


def dumps_matrix(f: DecayMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["site", *f.sites.ids])
    for sid, row in zip(f.sites.ids, f.values):
        w.writerow([sid, *(format_value(v) for v in row)])
    return buf.getvalue()


def write_matrix(f: DecayMatrix, path: PathLike) -> None:
    Path(path).write_text(dumps_matrix(f))


def loads_matrix(text: str, symmetrize: bool = True) -> DecayMatrix:
    """Parse ``site,id_0,...`` then one ``id_i,v_i0,...`` row per site.

    Errors name the offending line (1-based) and, for bad numbers, the column.
    """
    rows = [(k + 1, r) for k, r in enumerate(csv.reader(io.StringIO(text))) if any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty matrix file", 1)
    line, header = rows[0]
    if not header or header[0].strip() != "site":
        raise ParseError("header must start with 'site'", line, 1)
    ids = [h.strip() for h in header[1:]]
    n = len(ids)
    if n == 0:
        raise ParseError("header lists no sites", line)
    if len(set(ids)) != n:
        raise ParseError("duplicate site ids in header", line)
    body = rows[1:]
    if len(body) != n:
        raise ParseError(f"expected {n} data rows, found {len(body)}", body[-1][0] if body else line)
    values = np.empty((n, n))
    for i, (line, row) in enumerate(body):
        if len(row) != n + 1:
            raise ParseError(f"row has {len(row)} fields, expected {n + 1}", line)
        if row[0].strip() != ids[i]:
            raise ParseError(f"row label {row[0].strip()!r} does not match header id {ids[i]!r}", line, 1)
        for j, cell in enumerate(row[1:]):
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise ParseError(f"not a number: {cell!r}", line, j + 2) from None
    try:
        return build_decay_matrix(values, SiteSet(tuple(ids)), symmetrize)
    except CoarseMapError as exc:
        raise ParseError(str(exc)) from None


def read_matrix(path: PathLike, symmetrize: bool = True) -> DecayMatrix:
    return loads_matrix(Path(path).read_text(), symmetrize)


def relation_dot(e: Relation, name: str = "E") -> str:
    """Undirected DOT graph, nodes coloured by connected component."""
    labels = connected_profile(e).labels
    lines = [f'graph "{name}" {{']
    for sid, lab in zip(e.sites.ids, labels):
        lines.append(f'  "{sid}" [style=filled, fillcolor="{PALETTE[lab % len(PALETTE)]}", component={lab}];')
    for i, j in e.edges():
        lines.append(f'  "{e.sites.ids[i]}" -- "{e.sites.ids[j]}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _write_rows(path: PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(v) if isinstance(v, float) else v for v in row])


def write_growth(g: GrowthCurve, path: PathLike) -> None:
    _write_rows(path, ["r", "gamma"], zip(g.radii, g.gamma))


def write_persistence(grid, path: PathLike) -> None:
    _write_rows(path, ["epsilon", "r_lo", "r_hi", "slope", "stderr"], grid.rows())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # JSON has no infinities or NaN
        return x if math.isfinite(x) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def report(kind: str, body: dict) -> dict:
    return {"schema": SCHEMA, "kind": kind, **_jsonable(body)}


def write_json(obj: dict, path: PathLike) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n")


def read_json(path: PathLike) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
