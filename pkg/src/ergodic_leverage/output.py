"""Deterministic CSV/JSON writers.

Numbers are written with a fixed number of significant digits and
infinities as the strings ``"inf"``/``"-inf"`` in both formats.  CSV files
start with ``# key=value`` metadata lines; JSON documents carry a
``"metadata"`` object.  Parameters in metadata keep their full ``repr`` so a
run can be repeated exactly from its own output.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

__all__ = ["fmt_number", "json_ready", "render_csv", "render_json", "read_metadata"]


def fmt_number(x: Any, precision: int = 12) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    out = format(x, f".{precision}g")
    return "0" if out == "-0" else out


def json_ready(obj: Any, precision: int = 12) -> Any:
    """Round floats to ``precision`` digits and turn non-finite values into strings."""
    if isinstance(obj, Mapping):
        return {str(k): json_ready(v, precision) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return json_ready(obj.tolist(), precision)
    if isinstance(obj, (list, tuple)):
        return [json_ready(v, precision) for v in obj]
    if obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    s = fmt_number(obj, precision)
    return s if s in ("inf", "-inf", "nan") else float(s)


def _meta_value(v: Any) -> str:
    if isinstance(v, (list, tuple)):
        return ",".join(_meta_value(x) for x in v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_csv(
    metadata: Mapping[str, Any],
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    precision: int = 12,
) -> str:
    buf = io.StringIO()
    for key, value in metadata.items():
        buf.write(f"# {key}={_meta_value(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else fmt_number(v, precision) for v in row])
    return buf.getvalue()


def render_json(metadata: Mapping[str, Any], body: Mapping[str, Any], precision: int = 12) -> str:
    meta = {k: _meta_value(v) for k, v in metadata.items()}
    doc = {"metadata": meta, **json_ready(body, precision)}
    return json.dumps(doc, indent=2) + "\n"


def read_metadata(text: str) -> dict[str, str]:
    """Metadata of a CSV or JSON document produced by this module, as strings."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return dict(json.loads(text)["metadata"])
    meta = {}
    for line in text.splitlines():
        if not line.startswith("# "):
            break
        key, _, value = line[2:].partition("=")
        meta[key] = value
    return meta
