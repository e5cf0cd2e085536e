"""Structured (JSON) and plain-text report writers."""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

SCHEMA = "gsfr-report/1"

SIM_COLUMNS = (
    ("Coverage(%)", "coverage_pct", "{:.2f}"),
    ("FN(%)", "fn_pct", "{:.4f}"),
    ("FP(%)", "fp_pct", "{:.4f}"),
    ("Best size", "best_size_mean", "{:.2f}"),
    ("Selected size", "selected_size_mean", "{:.2f}"),
    ("Time(s)", "runtime_mean_s", "{:.4f}"),
    ("RSS", "rss_mean", "{:.2f}"),
    ("MSPE", "mspe_mean", "{:.4f}"),
)


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, (set, frozenset, tuple)):
        return list(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _clean(o):
    # JSON has no NaN/inf; encode them as null
    if isinstance(o, float) and not math.isfinite(o):
        return None
    if isinstance(o, dict):
        return {str(k): _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    return o


def dumps(payload: dict) -> str:
    body = {"schema": SCHEMA, **payload}
    body = json.loads(json.dumps(body, default=_default))
    return json.dumps(_clean(body), indent=2, allow_nan=False)


def write_json(path, payload: dict) -> Path:
    """Write atomically: the target only appears once fully written."""
    path = Path(path)
    text = dumps(payload)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    if d.get("schema") != SCHEMA:
        raise ValueError(f"{path}: expected schema {SCHEMA!r}, found {d.get('schema')!r}")
    return d


def _fmt(fmt: str, v) -> str:
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return "-"
    return fmt.format(v)


def format_table(header, rows) -> str:
    widths = [max(len(str(h)), *(len(str(r[i])) for r in rows)) for i, h in enumerate(header)]
    line = lambda cells: "  ".join(str(c).rjust(w) for c, w in zip(cells, widths))
    out = [line(header), line("-" * w for w in widths)]
    out.extend(line(r) for r in rows)
    return "\n".join(out)


def sim_table(methods: dict, runtime_display: dict = None) -> str:
    """Rows per method in the standard simulation-table column order."""
    rows = []
    for name, s in methods.items():
        s = s if isinstance(s, dict) else s.__dict__
        cells = [name]
        for _, key, fmt in SIM_COLUMNS:
            if key == "runtime_mean_s" and runtime_display and name in runtime_display:
                cells.append(runtime_display[name])
            else:
                cells.append(_fmt(fmt, s.get(key)))
        rows.append(cells)
    return format_table(["Method", *(c[0] for c in SIM_COLUMNS)], rows)
