"""JSON and CSV serialization for run reports.

Exact rationals are written as ``"num/den"`` strings.  JSON output uses sorted
keys so identical reports are byte-identical; the ``wall_clock`` field is kept
out of the canonical form.

CSV layout for law reports, one row per (N, x_index):
``N,k,x_index,x,ratio`` followed by one ``exceeds_<eps>`` column per eps.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import platform
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .contfrac import Surd

SCHEMA_VERSION = 1
VOLATILE = ("wall_clock",)


def to_jsonable(obj):
    if isinstance(obj, Surd):
        return str(obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, dict):
        return {_key(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [to_jsonable(v) for v in obj]
    return repr(obj)


def _key(k) -> str:
    if isinstance(k, str):
        return k
    v = to_jsonable(k)
    return v if isinstance(v, str) else repr(v)


def envelope(kind: str, body, config: dict | None = None, canonical: bool = True) -> dict:
    """Wrap a report with schema, version and config echo."""
    data = to_jsonable(body)
    if canonical and isinstance(data, dict):
        for k in VOLATILE:
            data.pop(k, None)
    return {
        "schema": f"trimbirk.{kind}",
        "schema_version": SCHEMA_VERSION,
        "versions": {"trimbirk": __version__, "numpy": np.__version__, "python": platform.python_version()},
        "config": to_jsonable(config or {}),
        "report": data,
    }


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def law_csv(report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    eps = list(report.eps)
    w.writerow(["N", "k", "x_index", "x", "ratio"] + [f"exceeds_{e}" for e in eps])
    xs = report.design["points"]
    for i, N in enumerate(report.Ns):
        for j, row in enumerate(report.ratios):
            r = row[i]
            flags = [int(not (abs(r - 1) <= e)) if not math.isinf(e) else 0 for e in eps]
            w.writerow([N, report.ks[i], j, to_jsonable(xs[j]), repr(r)] + flags)
    return buf.getvalue()


def export_report(text: str, path) -> Path:
    """Write ``text`` to ``path``; ``OSError`` propagates for unwritable paths."""
    p = Path(path)
    p.write_text(text)
    return p
