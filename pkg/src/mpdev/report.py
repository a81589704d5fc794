"""Report rows and their CSV / JSON-lines serialization."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field, fields

from .errors import ParameterError, ReportIOError

_CORE = ("kind", "p", "n", "phi", "row_type", "trial", "seed",
         "dist_fs", "wasserstein1", "interval_discrepancy", "exceed", "wall_time")


@dataclass
class ReportRow:
    """One experiment record.

    ``row_type`` is ``trial`` for per-trial rows; aggregates use the name of
    the statistic (``median``, ``mean``, ``max``, ...) with ``trial = -1``.
    Experiment-specific values go into ``extras``.
    """

    kind: str
    p: int
    n: int
    phi: float
    row_type: str = "trial"
    trial: int = -1
    seed: int = 0
    dist_fs: float | None = None
    wasserstein1: float | None = None
    interval_discrepancy: float | None = None
    exceed: bool | None = None
    wall_time: float | None = None
    extras: dict = field(default_factory=dict)


@dataclass
class Series:
    """A plot-ready curve: y(x) with a lower/upper band."""

    name: str
    x: list
    y: list
    y_lo: list
    y_hi: list


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return _fmt(v)
    if isinstance(v, float):
        return float(format(v, ".17g"))
    return v


def _columns(rows, include_timing: bool):
    core = [c for c in _CORE if include_timing or c != "wall_time"]
    extra = sorted({k for r in rows for k in r.extras})
    return core, extra


def _row_values(row: ReportRow, core, extra) -> dict:
    out = {c: getattr(row, c) for c in core}
    for k in extra:
        out[k] = row.extras.get(k)
    return out


def render_csv(rows, include_timing: bool = False) -> str:
    core, extra = _columns(rows, include_timing)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow(core + extra)
    for r in rows:
        vals = _row_values(r, core, extra)
        w.writerow([_fmt(vals[c]) for c in core + extra])
    return buf.getvalue()


def render_jsonl(rows, include_timing: bool = False) -> str:
    core, extra = _columns(rows, include_timing)
    lines = []
    for r in rows:
        vals = _row_values(r, core, extra)
        lines.append(json.dumps({k: _jsonable(v) for k, v in vals.items()}, sort_keys=False))
    return "\n".join(lines) + "\n"


def render_series(series) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["series", "x", "y", "y_lo", "y_hi"])
    for s in series:
        for row in zip(s.x, s.y, s.y_lo, s.y_hi):
            w.writerow([s.name] + [_fmt(v) for v in row])
    return buf.getvalue()


def _write(path: str, text: str):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ReportIOError(f"cannot write report to {path}: {exc.strerror}") from exc


def series_path(path: str) -> str:
    root, _ = os.path.splitext(path)
    return root + ".series.csv"


def emit_report(rows, format: str, path: str, series=(), include_timing: bool = False) -> list[str]:
    """Write ``rows`` as CSV or JSON lines, plus a companion series file.

    Returns the list of paths written.
    """
    rows = list(rows)
    if not rows:
        raise ParameterError("refusing to write an empty report")
    if format == "csv":
        text = render_csv(rows, include_timing)
    elif format == "json":
        text = render_jsonl(rows, include_timing)
    else:
        raise ParameterError(f"unknown report format {format!r}")
    _write(path, text)
    written = [path]
    if series:
        sp = series_path(path)
        _write(sp, render_series(series))
        written.append(sp)
    return written


# -- reading back -------------------------------------------------------------

_INT_FIELDS = {"p", "n", "trial", "seed"}
_FLOAT_FIELDS = {"phi", "dist_fs", "wasserstein1", "interval_discrepancy", "wall_time"}


def _parse_scalar(text: str):
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _row_from_dict(d: dict) -> ReportRow:
    kw, extras = {}, {}
    names = {f.name for f in fields(ReportRow)}
    for k, v in d.items():
        if isinstance(v, str) and k not in ("kind", "row_type"):
            v = _parse_scalar(v)
        if k in names and k != "extras":
            if k in _INT_FIELDS and v is not None:
                v = int(v)
            elif k in _FLOAT_FIELDS and v is not None:
                v = float(v)
            kw[k] = v
        else:
            extras[k] = v
    return ReportRow(**kw, extras=extras)


def read_report(path: str) -> list[ReportRow]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise ReportIOError(f"cannot read report {path}: {exc.strerror}") from exc
    if text.lstrip().startswith("{"):
        return [_row_from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]
    return [_row_from_dict(d) for d in csv.DictReader(io.StringIO(text))]
