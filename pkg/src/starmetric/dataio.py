"""Point-set ingestion and grid serialisation."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DomainError, UsageError
from .metric import StarMetricSpace
from .topology import BallGrid

_DECIMAL = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


class IngestError(UsageError):
    def __init__(self, message, row: Optional[int] = None, col: Optional[int] = None):
        where = ""
        if row is not None:
            where = f"row {row}" + (f" col {col}" if col is not None else "") + ": "
        super().__init__(where + message)
        self.row = row
        self.col = col


@dataclass
class Dataset:
    points: np.ndarray
    source: str
    format: str

    @property
    def arity(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.points)

    def validate_for(self, space: StarMetricSpace) -> "Dataset":
        if self.arity != space.arity:
            raise IngestError(f"{self.source}: arity {self.arity} does not match space arity {space.arity}")
        ok = space.domain(self.points)
        if not np.all(ok):
            i = int(np.argmin(ok))
            raise DomainError(f"{self.source}: row {i + 1} {self.points[i].tolist()} "
                              f"is outside the domain of {space.name}")
        return self


def _is_decimal(cell: str) -> bool:
    return bool(_DECIMAL.match(cell.strip()))


def _rows_to_array(rows: list[list[float]], source: str) -> np.ndarray:
    if not rows:
        raise IngestError(f"{source}: no data rows")
    width = len(rows[0])
    for i, r in enumerate(rows, start=1):
        if len(r) != width:
            raise IngestError(f"ragged row: expected {width} values, got {len(r)}", row=i)
    return np.asarray(rows, dtype=float).reshape(len(rows), width)


def parse_csv(text: str, source: str = "<csv>") -> Dataset:
    """One point per row; a first row with no numeric cell is taken as a header."""
    rows: list[list[float]] = []
    reader = csv.reader(io.StringIO(text))
    first = True
    for lineno, cells in enumerate(reader, start=1):
        if not cells or all(not c.strip() for c in cells):
            continue
        if first:
            first = False
            if not any(_is_decimal(c) for c in cells):
                continue
        row = []
        for col, cell in enumerate(cells, start=1):
            if not _is_decimal(cell):
                raise IngestError(f"non-numeric cell {cell!r}", row=lineno, col=col)
            row.append(float(cell))
        rows.append(row)
    return Dataset(_rows_to_array(rows, source), source, "csv")


def parse_json(text: str, source: str = "<json>") -> Dataset:
    """An array of arrays of numbers (a flat array is read as scalar points)."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise IngestError(f"{source}: invalid JSON: {e}") from None
    if not isinstance(data, list):
        raise IngestError(f"{source}: expected a JSON array of points")
    rows = []
    for i, item in enumerate(data, start=1):
        cells = item if isinstance(item, list) else [item]
        row = []
        for j, v in enumerate(cells, start=1):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise IngestError(f"non-numeric value {v!r}", row=i, col=j)
            if not math.isfinite(v):
                raise IngestError(f"non-finite value {v!r}", row=i, col=j)
            row.append(float(v))
        rows.append(row)
    return Dataset(_rows_to_array(rows, source), source, "json")


def ingest(path, fmt: Optional[str] = None, space: Optional[StarMetricSpace] = None) -> Dataset:
    """Read a CSV or JSON point file; ``fmt`` defaults to the file extension."""
    path = Path(path)
    if fmt is None:
        fmt = "json" if path.suffix.lower() == ".json" else "csv"
    if fmt not in ("csv", "json"):
        raise UsageError(f"unknown data format {fmt!r}")
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise IngestError(f"data file not found: {path}") from None
    ds = parse_csv(text, str(path)) if fmt == "csv" else parse_json(text, str(path))
    if space is not None:
        ds.validate_for(space)
    return ds


def parse_inline_points(text: str, arity: int) -> np.ndarray:
    """``"1,16,25"`` for scalar points, ``"0,0;1,2"`` for tuples."""
    text = text.strip()
    if not text:
        raise IngestError("empty point list")
    if arity == 1 and ";" not in text:
        groups = [[c] for c in text.split(",")]
    else:
        groups = [g.split(",") for g in text.split(";") if g.strip()]
    rows = []
    for i, g in enumerate(groups, start=1):
        row = []
        for j, cell in enumerate(g, start=1):
            if not _is_decimal(cell):
                raise IngestError(f"non-numeric value {cell!r}", row=i, col=j)
            row.append(float(cell))
        if len(row) != arity:
            raise IngestError(f"expected {arity} coordinates, got {len(row)}", row=i)
        rows.append(row)
    return np.asarray(rows, dtype=float)


# --- grid output --------------------------------------------------------------

def grid_to_pgm(grid: BallGrid, comment: str = "") -> str:
    """Plain PGM (P2): maxval 2, 0 = out, 1 = in, 2 = boundary-ambiguous; row 0 is the top (y max)."""
    h, w = grid.values.shape
    lines = ["P2"]
    for c in comment.splitlines():
        lines.append(f"# {c}")
    lines.append(f"{w} {h}")
    lines.append("2")
    lines.extend(" ".join(str(int(v)) for v in row) for row in grid.values)
    return "\n".join(lines) + "\n"


def grid_to_csv(grid: BallGrid) -> str:
    """Header ``x,y,value``; one line per cell, rows from y max down, x ascending."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["x", "y", "value"])
    for i, y in enumerate(grid.ys):
        for j, x in enumerate(grid.xs):
            w.writerow([repr(float(x)), repr(float(y)), int(grid.values[i, j])])
    return out.getvalue()


def read_pgm(text: str) -> np.ndarray:
    tokens = []
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        tokens.extend(line.split())
    if not tokens or tokens[0] != "P2":
        raise UsageError("not a plain PGM (P2) file")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    vals = np.asarray([int(t) for t in tokens[4:]], dtype=np.int64)
    if vals.size and (vals.min() < 0 or vals.max() > maxval):
        raise UsageError(f"PGM values must lie in [0, {maxval}]")
    if vals.size != w * h:
        raise UsageError(f"PGM body has {vals.size} values, expected {w * h}")
    return vals.reshape(h, w).astype(np.uint8 if maxval < 256 else np.uint16)


def write_atomic(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename into place."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=directory)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
