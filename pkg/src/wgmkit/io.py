"""Trace CSV files, JSON configs and deterministic report output.

Trace files are UTF-8 CSV with header ``freq_hz,s21_re,s21_im`` or
``freq_hz,s21_mag``. Optional metadata lines precede the header:

    # source_dbm=-20
    # temperature_mk=27
    # mode=WGH20
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError
from .lineshape import FrequencyTrace, TraceMeta

COMPLEX_HEADER = ("freq_hz", "s21_re", "s21_im")
MAG_HEADER = ("freq_hz", "s21_mag")

_META_KEYS = {"source_dbm": float, "temperature_mk": float, "mode": str}


def parse_trace_csv(path) -> FrequencyTrace:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"trace file not found: {path}")
    meta = {}
    header = None
    freq, resp = [], []
    prev_f = -math.inf
    with path.open(encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                body = text[1:].strip()
                if "=" in body:
                    key, value = (s.strip() for s in body.split("=", 1))
                    if key in _META_KEYS:
                        try:
                            meta[key] = _META_KEYS[key](value)
                        except ValueError:
                            raise ValidationError(f"{path}:{lineno}: bad metadata value {value!r}") from None
                continue
            cells = next(csv.reader([text]))
            if header is None:
                header = tuple(c.strip() for c in cells)
                if header not in (COMPLEX_HEADER, MAG_HEADER):
                    raise ValidationError(f"{path}:{lineno}: unrecognised header {','.join(header)}")
                continue
            if len(cells) != len(header):
                raise ValidationError(f"{path}:{lineno}: expected {len(header)} columns, got {len(cells)}")
            try:
                vals = [float(c) for c in cells]
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: malformed number in {text!r}") from None
            if not all(math.isfinite(v) for v in vals):
                raise ValidationError(f"{path}:{lineno}: non-finite value")
            if vals[0] <= prev_f:
                raise ValidationError(f"{path}:{lineno}: frequency {vals[0]!r} is not strictly increasing")
            prev_f = vals[0]
            freq.append(vals[0])
            resp.append(complex(vals[1], vals[2]) if len(vals) == 3 else complex(vals[1], 0.0))
    if header is None:
        raise ValidationError(f"{path}: no header line")
    try:
        return FrequencyTrace(
            np.array(freq), np.array(resp, dtype=complex), TraceMeta(**meta), complex_data=header == COMPLEX_HEADER
        )
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def format_trace_csv(trace: FrequencyTrace) -> str:
    lines = []
    m = trace.meta
    if m.source_dbm is not None:
        lines.append(f"# source_dbm={m.source_dbm!r}")
    if m.temperature_mk is not None:
        lines.append(f"# temperature_mk={m.temperature_mk!r}")
    if m.mode is not None:
        lines.append(f"# mode={m.mode}")
    if trace.complex_data:
        lines.append(",".join(COMPLEX_HEADER))
        lines += [f"{f!r},{r.real!r},{r.imag!r}" for f, r in zip(trace.freq.tolist(), trace.response.tolist())]
    else:
        lines.append(",".join(MAG_HEADER))
        lines += [f"{f!r},{y!r}" for f, y in zip(trace.freq.tolist(), trace.magnitude.tolist())]
    return "\n".join(lines) + "\n"


def write_trace_csv(path, trace: FrequencyTrace) -> None:
    atomic_write_text(path, format_trace_csv(trace))


def load_json(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"config file not found: {path}")
    try:
        with path.open(encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return "null" if obj is None else ("true" if obj else "false")
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return format(v, ".17g") if math.isfinite(v) else "null"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{json.dumps(str(k))}: {_encode(obj[k], indent, level + 1)}" for k in sorted(obj, key=str)]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        if not seq:
            return "[]"
        return "[" + pad + ("," + pad).join(_encode(v, indent, level + 1) for v in seq) + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_report(obj, indent: int = 2) -> str:
    """JSON with sorted keys and every float written with 17 significant digits.

    The standard encoder offers no control over float formatting, hence the
    small hand-rolled writer. Non-finite floats become ``null``.
    """
    return _encode(obj, indent, 0) + "\n"


def format_csv_table(columns: Sequence[str], rows: Iterable[Sequence[float]]) -> str:
    out = [",".join(columns)]
    for row in rows:
        out.append(",".join(format(float(v), ".17g") for v in row))
    return "\n".join(out) + "\n"


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the target directory and rename into place."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    if not directory.is_dir():
        raise ValidationError(f"output directory does not exist: {directory}")
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
