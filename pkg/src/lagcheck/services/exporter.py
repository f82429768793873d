import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Sequence

import numpy as np

from .. import __version__
from .settings import resolve_output_path

SCHEMA = "lagcheck/1"


def _ensure_dir(path: str) -> None:
    if path:
        os.makedirs(path, exist_ok=True)


def _plain_float(x: float):
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    # -0.0 would print differently on some paths; fold it
    return x + 0.0


def to_plain(obj: Any) -> Any:
    """
    Convert results into JSON-ready values: enums to their value, complex
    numbers to {"re", "im"}, numpy scalars and arrays to Python, non-finite
    floats to strings.
    """
    if isinstance(obj, Enum):
        return to_plain(obj.value)
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _plain_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _plain_float(obj.real), "im": _plain_float(obj.imag)}
    if isinstance(obj, np.ndarray):
        return [to_plain(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(x) for x in obj]
    raise TypeError(f"cannot export value of type {type(obj).__name__}")


def format_float(x: float) -> str:
    """Up to 17 significant digits; integral values keep a trailing ".0"."""
    text = format(x, ".17g")
    if not any(ch in text for ch in ".e"):
        text += ".0"
    return text


def _encode(value: Any, level: int) -> str:
    # same layout as json.dumps(indent=2, sort_keys=True) but floats use format_float
    pad = "  " * (level + 1)
    close = "  " * level
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{json.dumps(k, ensure_ascii=False)}: {_encode(value[k], level + 1)}" for k in sorted(value)]
        return "{\n" + ",\n".join(items) + "\n" + close + "}"
    if isinstance(value, list):
        if not value:
            return "[]"
        return "[\n" + ",\n".join(pad + _encode(v, level + 1) for v in value) + "\n" + close + "]"
    if isinstance(value, float):
        return format_float(value)
    return json.dumps(value, ensure_ascii=False)


@dataclass
class ReportDocument:
    command: str
    inputs: Dict[str, Any] = field(default_factory=dict)
    results: Dict[str, Any] = field(default_factory=dict)
    schema: str = SCHEMA
    version: str = __version__
    deterministic: bool = True

    def as_dict(self) -> Dict[str, Any]:
        return to_plain({
            "schema": self.schema,
            "tool": {"name": "lagcheck", "version": self.version},
            "deterministic": self.deterministic,
            "command": self.command,
            "inputs": self.inputs,
            "results": self.results,
        })

    def to_json(self) -> str:
        return _encode(self.as_dict(), 0) + "\n"


def _csv_cell(value: Any) -> str:
    value = to_plain(value)
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, (list, dict)):
        return json.dumps(value, sort_keys=True)
    return str(value)


def render_csv(rows: Sequence[Dict[str, Any]], fields: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(fields), extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: _csv_cell(row.get(k)) for k in fields})
    return buf.getvalue()


def write_text(text: str, path: str) -> str:
    """Write text to path (bare names go to the export directory) and return the path used."""
    target = resolve_output_path(path)
    _ensure_dir(os.path.dirname(target))
    with open(target, "w", newline="", encoding="utf-8") as f:
        f.write(text)
    return target


def export_json(doc: ReportDocument, path: str) -> str:
    return write_text(doc.to_json(), path)


def export_csv(rows: List[Dict[str, Any]], fields: Sequence[str], path: str) -> str:
    return write_text(render_csv(rows, fields), path)
