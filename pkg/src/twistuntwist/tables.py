"""Rectangular result tables and their CSV / JSON serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__


@dataclass
class SweepTable:
    columns: list
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.columns = list(self.columns)
        self.rows = [list(r) for r in self.rows]
        for r in self.rows:
            if len(r) != len(self.columns):
                raise ValueError(f"row {r!r} does not match {len(self.columns)} columns")

    def append(self, row):
        row = list(row)
        if len(row) != len(self.columns):
            raise ValueError(f"row {row!r} does not match {len(self.columns)} columns")
        self.rows.append(row)

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def _fmt(value):
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def to_csv_text(table: SweepTable) -> str:
    buf = io.StringIO()
    meta = {"tool": f"twistuntwist {__version__}", **table.meta}
    for key, value in meta.items():
        buf.write(f"# {key}: {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def to_json_text(table: SweepTable) -> str:
    payload = {
        "columns": table.columns,
        "rows": [[_json_value(v) for v in r] for r in table.rows],
        "meta": {"tool": f"twistuntwist {__version__}", **table.meta},
    }
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"


def emit(table: SweepTable, path, fmt="csv") -> Path:
    """Write ``table`` to ``path`` as ``csv`` or ``json``."""
    if fmt == "csv":
        text = to_csv_text(table)
    elif fmt == "json":
        text = to_json_text(table)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    path = Path(path)
    path.write_text(text)
    return path


def _parse_cell(text):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_csv(path) -> SweepTable:
    meta = {}
    lines = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(": ")
            meta[key] = value
        else:
            lines.append(line)
    reader = csv.reader(lines)
    columns = next(reader)
    rows = [[_parse_cell(c) for c in r] for r in reader]
    return SweepTable(columns, rows, meta)


def read_json(path) -> SweepTable:
    payload = json.loads(Path(path).read_text())
    rows = [[math.nan if v is None else v for v in r] for r in payload["rows"]]
    return SweepTable(payload["columns"], rows, payload["meta"])
