"""Readers and writers for the on-disk formats used by the command line.

Conventions
-----------
* Every float is written with 17 significant digits so values round-trip.
* Label vectors are 1-based on disk and 0-based in memory.
* Files carry a provenance record (config hash and master seed): a
  ``"meta"`` key in JSON, a leading ``{"meta": ...}`` line in JSON-lines
  files and ``#`` comment lines at the top of CSV files.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .measures import MixingMeasure


class ValidationError(ValueError):
    """Bad user input: malformed files, inconsistent shapes, bad config."""


def fmt(x) -> str:
    """17-significant-digit decimal for floats; plain text for ints."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = format(x, ".17g")
    # keep floats recognisable as floats ("1.0", not "1")
    return s if any(c in s for c in ".en") else s + ".0"


def _json_text(obj, indent, level) -> str:
    pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
    end = "" if indent is None else "\n" + " " * (indent * level)
    sep = ", " if indent is None else ","
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, float, np.integer, np.floating)):
        return fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_text(v, indent, level + 1)}" for k, v in obj.items()]
        return "{" + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        # numeric vectors stay on one line to keep files compact
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_json_text(v, None, 0) for v in obj) + "]"
        items = [pad + _json_text(v, indent, level + 1) for v in obj]
        return "[" + sep.join(items) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=None) -> str:
    """JSON text with 17-significant-digit floats."""
    return _json_text(obj, indent, 0)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    """First 16 hex digits of the SHA-256 of the canonical config JSON."""
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()[:16]


def provenance(config: dict, seed) -> dict:
    return {"config_hash": config_hash(config), "seed": seed}


def _open_for_write(path):
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline="", encoding="utf-8")


def write_json(path, obj, meta: dict | None = None):
    if meta is not None:
        obj = {"meta": meta, **obj}
    with _open_for_write(path) as fh:
        fh.write(dumps(obj, indent=2) + "\n")


def read_json(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"{path}: file not found")
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None


def _comment_lines(meta: dict | None) -> list[str]:
    if not meta:
        return []
    return [f"# {k}={v}" for k, v in meta.items()]


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], meta: dict | None = None):
    with _open_for_write(path) as fh:
        for line in _comment_lines(meta):
            fh.write(line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def _data_lines(path):
    """Yield ``(line_number, fields)`` skipping comments and blank lines."""
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"{path}: file not found")
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            yield lineno, next(csv.reader([s]))


def _is_number(s) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_data_csv(path, return_header=False):
    """Numeric matrix from a CSV file with an optional header row.

    Raises :class:`ValidationError` naming the offending line when a row
    has the wrong width or a non-numeric / non-finite entry.
    """
    header = None
    rows = []
    width = None
    for lineno, fields in _data_lines(path):
        fields = [f.strip() for f in fields]
        if header is None and not rows and not all(_is_number(f) for f in fields):
            header = fields
            width = len(fields)
            continue
        if width is None:
            width = len(fields)
        if len(fields) != width:
            raise ValidationError(f"{path}: line {lineno}: expected {width} columns, found {len(fields)}")
        try:
            vals = [float(f) for f in fields]
        except ValueError:
            raise ValidationError(f"{path}: line {lineno}: non-numeric value in {fields}") from None
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError(f"{path}: line {lineno}: non-finite value")
        rows.append(vals)
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    data = np.array(rows, dtype=float)
    return (data, header) if return_header else data


def write_data_csv(path, data, header=None, meta=None):
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if header is None:
        header = [f"y{j + 1}" for j in range(data.shape[1])]
    write_csv(path, header, data.tolist(), meta)


def write_labels_csv(path, labels, meta=None):
    """One label per row, converted to 1-based."""
    labels = np.asarray(labels, dtype=np.int64)
    write_csv(path, ["label"], ([int(z) + 1] for z in labels), meta)


def read_labels_csv(path) -> np.ndarray:
    """Labels from a one-column CSV; returns 0-based labels."""
    out = []
    for lineno, fields in _data_lines(path):
        if len(fields) != 1:
            raise ValidationError(f"{path}: line {lineno}: expected one column")
        s = fields[0].strip()
        if not out and not _is_number(s):
            continue  # header
        try:
            z = int(s)
        except ValueError:
            raise ValidationError(f"{path}: line {lineno}: label {s!r} is not an integer") from None
        if z < 1:
            raise ValidationError(f"{path}: line {lineno}: labels are 1-based, got {z}")
        out.append(z - 1)
    return np.array(out, dtype=np.int64)


def measure_from_json(obj) -> MixingMeasure:
    """Accept a bare measure object or one wrapped under ``"measure"``."""
    if "measure" in obj and isinstance(obj["measure"], dict):
        obj = obj["measure"]
    try:
        return MixingMeasure.from_dict(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"invalid mixing measure: {exc}") from None


def read_measure(path) -> MixingMeasure:
    try:
        return measure_from_json(read_json(path))
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def write_measure(path, G: MixingMeasure, meta=None):
    write_json(path, {"measure": G.to_dict()}, meta)


def write_draws_jsonl(path, draws, meta=None):
    """One posterior draw per line: iteration, measure and 1-based labels."""
    with _open_for_write(path) as fh:
        if meta is not None:
            fh.write(dumps({"meta": meta}) + "\n")
        for d in draws:
            rec = {"iteration": int(d.iteration), "measure": d.measure.to_dict(),
                   "labels": (np.asarray(d.labels) + 1).tolist()}
            fh.write(dumps(rec) + "\n")


def read_draws_jsonl(path):
    """Inverse of :func:`write_draws_jsonl`; returns ``(draws, meta)``."""
    from .gibbs import PosteriorDraw

    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"{path}: file not found")
    draws, meta = [], None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: line {lineno}: invalid JSON ({exc})") from None
            if "meta" in rec and len(rec) == 1:
                meta = rec["meta"]
                continue
            try:
                G = MixingMeasure.from_dict(rec["measure"])
                labels = np.asarray(rec["labels"], dtype=np.int64) - 1
            except (KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"{path}: line {lineno}: bad draw record ({exc})") from None
            if labels.size and labels.min() < 0:
                raise ValidationError(f"{path}: line {lineno}: labels are 1-based")
            draws.append(PosteriorDraw(G, labels, int(rec.get("iteration", len(draws)))))
    if not draws:
        raise ValidationError(f"{path}: no draws found")
    return draws, meta


def ensure_dir(path) -> Path:
    path = Path(path)
    os.makedirs(path, exist_ok=True)
    return path
