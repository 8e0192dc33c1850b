"""Deterministic JSON and CSV output."""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

SCHEMA_VERSION = 1


def _default(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def dumps_json(obj: dict) -> str:
    """JSON with ``schema_version`` first, fixed key order and a trailing newline."""
    payload = {"schema_version": SCHEMA_VERSION, **obj}
    return json.dumps(payload, default=_default, indent=2) + "\n"


def fmt_float(x) -> str:
    return format(float(x), ".17g")


def dumps_csv(header: Sequence[str], rows: Iterable[Sequence], comments: Sequence[str] = ()) -> str:
    """CSV with optional leading ``#`` comment lines; floats at 17 significant digits."""
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(x) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()
