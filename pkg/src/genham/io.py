"""Artifact writers and readers.

CSV files open with ``#``-prefixed ``key: value`` metadata lines followed by
one header row. JSON reports carry a top-level ``schema_version``. Floats are
written with ``repr`` so every value round-trips exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from . import __version__

__all__ = ["SCHEMA_VERSION", "write_csv", "read_csv", "write_json", "read_json", "jsonable"]

SCHEMA_VERSION = 1
TOOL = "genham"


def _cell(x, scientific: bool = False) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        # 17 significant digits round-trip a double exactly
        return f"{float(x):.16e}" if scientific else repr(float(x))
    return str(x)


def write_csv(path, header, rows, meta: dict, scientific: bool = False) -> Path:
    """Write ``rows`` under ``header`` with metadata lines from ``meta``.

    Lines end in ``\\n`` on every platform so files compare byte for byte.
    ``scientific`` writes floats as ``d.dddde+xx`` with full precision.
    """
    path = Path(path)
    buf = io.StringIO()
    buf.write(f"# tool: {TOOL} {__version__}\n")
    for key, value in meta.items():
        buf.write(f"# {key}: {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(x, scientific) for x in row])
    path.write_text(buf.getvalue(), encoding="utf-8", newline="")
    return path


def _parse_cell(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_csv(path) -> tuple[dict, list[str], list[list]]:
    """Return ``(meta, header, rows)``; numeric cells come back as int or float."""
    meta, body = {}, []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(":")
            meta[key.strip()] = value.strip()
        else:
            body.append(line)
    reader = csv.reader(body)
    header = next(reader)
    rows = [[_parse_cell(c) for c in row] for row in reader]
    return meta, header, rows


def jsonable(obj):
    """Convert numpy scalars/arrays and non-finite floats to plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, complex):
        return {"re": jsonable(obj.real), "im": jsonable(obj.imag)}
    return obj


def write_json(path, payload: dict, meta: dict) -> Path:
    doc = {"schema_version": SCHEMA_VERSION, "tool": TOOL, "version": __version__}
    doc.update(jsonable(meta))
    doc["data"] = jsonable(payload)
    path = Path(path)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="")
    return path


def read_json(path) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if "schema_version" not in doc:
        raise ValueError(f"{path}: missing schema_version")
    return doc
