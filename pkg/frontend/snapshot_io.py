"""Readers for the simulator's on-disk outputs.

A snapshot file holds a cells section (x,y,d1,d2,d3,w1,w2,w3,Ex_avg,Ey_avg),
a '#nodes' marker line, and a nodes section (x,y,phi).  energies.csv is a
plain header+rows CSV.  These readers are strict: anything off-format raises
with the offending line number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CELL_COLUMNS = ("x", "y", "d1", "d2", "d3", "w1", "w2", "w3", "Ex_avg", "Ey_avg")
NODE_COLUMNS = ("x", "y", "phi")


class SnapshotParseError(ValueError):
    """Malformed snapshot file; message carries the 1-based line number."""


class SchemaError(ValueError):
    """CSV is readable but missing required columns or violating invariants."""


@dataclass
class SnapshotTable:
    """Parsed snapshot: cells (n^2, 10) and nodes ((n+1)^2, 3) in file order."""

    cells: np.ndarray
    nodes: np.ndarray
    n: int

    def cell_grid(self, column: str) -> np.ndarray:
        """Reshape one cells column to (n, n) with x along axis 0."""
        idx = CELL_COLUMNS.index(column)
        return self.cells[:, idx].reshape(self.n, self.n).T  # rows are y-outer


def _parse_row(line: str, lineno: int, width: int) -> list[float]:
    parts = line.split(",")
    if len(parts) != width:
        raise SnapshotParseError(f"line {lineno}: expected {width} columns, found {len(parts)}")
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise SnapshotParseError(f"line {lineno}: non-numeric value ({exc})") from exc


def parse_snapshot(path: str | Path) -> SnapshotTable:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != ",".join(CELL_COLUMNS):
        raise SnapshotParseError(f"line 1: expected cells header {','.join(CELL_COLUMNS)!r}")
    cells: list[list[float]] = []
    i = 1
    while i < len(lines) and lines[i] != "#nodes":
        cells.append(_parse_row(lines[i], i + 1, len(CELL_COLUMNS)))
        i += 1
    if i == len(lines):
        raise SnapshotParseError(f"line {len(lines)}: missing '#nodes' section marker")
    marker = i
    if marker + 1 >= len(lines) or lines[marker + 1] != ",".join(NODE_COLUMNS):
        raise SnapshotParseError(f"line {marker + 2}: expected nodes header {','.join(NODE_COLUMNS)!r}")
    nodes = [
        _parse_row(lines[j], j + 1, len(NODE_COLUMNS))
        for j in range(marker + 2, len(lines))
        if lines[j]
    ]

    n = math.isqrt(len(cells))
    if n * n != len(cells):
        raise SchemaError(f"cell count {len(cells)} is not a perfect square")
    if len(nodes) != (n + 1) ** 2:
        raise SchemaError(f"expected {(n + 1) ** 2} node rows for n={n}, found {len(nodes)}")
    return SnapshotTable(cells=np.asarray(cells), nodes=np.asarray(nodes), n=n)


def load_energies(path: str | Path, required: tuple[str, ...]) -> dict[str, np.ndarray]:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise SchemaError(f"{path}: empty file")
    header = lines[0].split(",")
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing columns {', '.join(missing)}")
    table = np.array([_parse_row(line, i + 2, len(header)) for i, line in enumerate(lines[1:]) if line])
    if table.size == 0:
        table = table.reshape(0, len(header))
    return {name: table[:, header.index(name)] for name in required}
