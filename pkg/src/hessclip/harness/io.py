"""CSV emission with a ``# key=value`` metadata block, and the matching reader."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from ..trace import TRACE_COLUMNS, RunTrace


@dataclass
class Table:
    """Column-ordered rows plus metadata; the unit every driver emits."""

    columns: list[str]
    rows: list[list]
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def where(self, **match) -> "Table":
        idx = [self.columns.index(k) for k in match]
        keep = [r for r in self.rows if all(r[i] == v for i, v in zip(idx, match.values()))]
        return Table(list(self.columns), keep, dict(self.meta))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def _meta_value(v) -> str:
    if isinstance(v, (dict, list, tuple)):
        return json.dumps(v, sort_keys=True, default=_fmt)
    return _fmt(v)


def trace_table(trace: RunTrace) -> Table:
    cols = trace.columns()
    rows = [[cols[c][i].item() for c in TRACE_COLUMNS] for i in range(len(trace))]
    for r in rows:
        r[3], r[4] = bool(r[3]), bool(r[4])
    return Table(list(TRACE_COLUMNS), rows, dict(trace.header))


def render_csv(obj: Table | RunTrace) -> str:
    table = trace_table(obj) if isinstance(obj, RunTrace) else obj
    buf = io.StringIO()
    for k in sorted(table.meta):
        buf.write(f"# {k}={_meta_value(table.meta[k])}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for r in table.rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def emit_csv(obj: Table | RunTrace, path: str | os.PathLike | None) -> str:
    """Write UTF-8 CSV to ``path`` (``-`` or ``None`` returns the text only)."""
    text = render_csv(obj)
    if path not in (None, "-"):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def _parse(s: str):
    if s == "":
        return None
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def parse_csv(text: str) -> Table:
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("# ") and not body:
            k, _, v = line[2:].partition("=")
            try:
                meta[k] = json.loads(v)
            except json.JSONDecodeError:
                meta[k] = v
        else:
            body.append(line)
    reader = csv.reader(body)
    columns = next(reader)
    rows = [[_parse(c) for c in r] for r in reader]
    return Table(columns, rows, meta)


def read_csv(path: str | os.PathLike) -> Table:
    with open(path, encoding="utf-8") as fh:
        return parse_csv(fh.read())
