"""Reading and writing metric files.

Two formats are supported:

* JSON: ``{"labels": [...], "matrix": [[...], ...]}``
* CSV: a headerless square matrix, one row per line.

Floats are always written with 17 significant digits so that a write/read
cycle reproduces every entry bit-exactly.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .errors import MetricFormatError
from .metric import FiniteMetricSpace, validate_metric


def fmt_float(x) -> str:
    return format(float(x), ".17g")


def _json_number_list(values) -> str:
    return "[" + ", ".join(fmt_float(v) for v in values) + "]"


def dumps_metric_json(space: FiniteMetricSpace) -> str:
    rows = ",\n    ".join(_json_number_list(r) for r in space.dist)
    labels = json.dumps(list(space.labels))
    return f'{{\n  "labels": {labels},\n  "matrix": [\n    {rows}\n  ]\n}}\n'


def dumps_metric_csv(space: FiniteMetricSpace) -> str:
    return "".join(",".join(fmt_float(v) for v in r) + "\n" for r in space.dist)


def loads_metric_json(text: str) -> FiniteMetricSpace:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MetricFormatError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict) or "matrix" not in doc:
        raise MetricFormatError('metric JSON must be an object with a "matrix" key')
    matrix = doc["matrix"]
    if not isinstance(matrix, list) or not all(isinstance(r, list) for r in matrix):
        raise MetricFormatError('"matrix" must be a list of rows')
    _check_square(matrix)
    labels = doc.get("labels")
    if labels is not None:
        labels = [str(x) for x in labels]
    return validate_metric(matrix, labels)


def loads_metric_csv(text: str) -> FiniteMetricSpace:
    rows = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            rows.append([float(c) for c in row])
        except ValueError:
            raise MetricFormatError(f"line {lineno}: non-numeric entry in {row!r}") from None
    if not rows:
        raise MetricFormatError("empty CSV matrix")
    _check_square(rows)
    return validate_metric(rows)


def _check_square(rows):
    n = len(rows)
    for i, r in enumerate(rows, start=1):
        if len(r) != n:
            raise MetricFormatError(f"row {i} has {len(r)} entries, expected {n}")


def read_metric(path) -> FiniteMetricSpace:
    """Load a metric file; the format follows the extension (``.csv`` or JSON)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MetricFormatError(f"cannot read {path}: {exc.strerror}") from None
    if path.suffix.lower() == ".csv":
        return loads_metric_csv(text)
    return loads_metric_json(text)


def write_metric(space: FiniteMetricSpace, path) -> Path:
    path = Path(path)
    text = dumps_metric_csv(space) if path.suffix.lower() == ".csv" else dumps_metric_json(space)
    path.write_text(text)
    return path
