"""Schema-checked loaders for the simulator's CSV outputs.

This package never recomputes simulation physics: every plotted value comes
from a CSV cell (plus, optionally, the scenario geometry echoed in
config.json for drawing layer outlines).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

TRACE_COLUMNS = ["t", "id", "x", "y", "phi", "r", "role", "k", "s", "c"]


class SchemaError(ValueError):
    """A CSV is missing a required column or holds a non-numeric cell."""


def _read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty")
        rows = list(reader)
    return [h.strip() for h in header], rows


def _to_float(cell, path, row_number, column):
    try:
        return float(cell)
    except ValueError:
        raise SchemaError(f"{path}: non-numeric value {cell!r} in column "
                          f"{column!r} at row {row_number}")


@dataclass
class Trace:
    """trace.csv contents as column arrays."""

    columns: dict

    @property
    def times(self) -> np.ndarray:
        return np.unique(self.columns["t"])

    def at_time(self, t: float) -> dict:
        mask = self.columns["t"] == t
        return {name: col[mask] for name, col in self.columns.items()}


def load_trace(path) -> Trace:
    header, rows = _read_csv(path)
    missing = [c for c in TRACE_COLUMNS if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing trace column {missing[0]!r}")
    if not rows:
        raise SchemaError(f"{path}: trace has no data rows")
    idx = {c: header.index(c) for c in TRACE_COLUMNS}
    data = {c: np.empty(len(rows)) for c in TRACE_COLUMNS}
    for j, row in enumerate(rows):
        for c in TRACE_COLUMNS:
            data[c][j] = _to_float(row[idx[c]], path, j + 2, c)
    return Trace(data)


@dataclass
class Summary:
    """summary.csv contents: times, per-layer probabilities, total."""

    t: np.ndarray
    layer_p: np.ndarray  # (T, K)
    total_p: np.ndarray
    layer_names: list


def load_summary(path) -> Summary:
    header, rows = _read_csv(path)
    if "t" not in header:
        raise SchemaError(f"{path}: missing summary column 't'")
    if "P" not in header:
        raise SchemaError(f"{path}: missing summary column 'P'")
    layer_cols = [h for h in header if h.startswith("P_")]
    if not layer_cols:
        raise SchemaError(f"{path}: missing per-layer columns 'P_1', ...")
    if not rows:
        raise SchemaError(f"{path}: summary has no data rows")
    t = np.empty(len(rows))
    total = np.empty(len(rows))
    layers = np.empty((len(rows), len(layer_cols)))
    it, ip = header.index("t"), header.index("P")
    ilayers = [header.index(c) for c in layer_cols]
    for j, row in enumerate(rows):
        t[j] = _to_float(row[it], path, j + 2, "t")
        total[j] = _to_float(row[ip], path, j + 2, "P")
        for m, col in enumerate(ilayers):
            layers[j, m] = _to_float(row[col], path, j + 2, layer_cols[m])
    return Summary(t, layers, total, layer_cols)


@dataclass
class SweepTable:
    param: np.ndarray
    series: dict  # column name -> values (nan where missing)


def load_sweep(path) -> SweepTable:
    header, rows = _read_csv(path)
    if "param_value" not in header:
        raise SchemaError(f"{path}: missing sweep column 'param_value'")
    series_cols = [h for h in header if h.startswith("P_")]
    if not series_cols:
        raise SchemaError(f"{path}: sweep has no P_* series columns")
    if not rows:
        raise SchemaError(f"{path}: sweep has no data rows")
    ipar = header.index("param_value")
    param = np.empty(len(rows))
    series = {c: np.full(len(rows), math.nan) for c in series_cols}
    for j, row in enumerate(rows):
        param[j] = _to_float(row[ipar], path, j + 2, "param_value")
        for c in series_cols:
            cell = row[header.index(c)].strip()
            if cell:
                series[c][j] = _to_float(cell, path, j + 2, c)
    return SweepTable(param, series)


def load_layer_outlines(config_path, samples: int = 1024):
    """(theta, radius) polylines of the scenario's layers from the config echo."""
    with open(config_path) as fh:
        cfg = json.load(fh)
    theta = np.linspace(0.0, 2.0 * math.pi, samples)
    outlines = []
    for spec in cfg.get("layers", []):
        kind = spec.get("type")
        if kind == "circle":
            r = np.full_like(theta, float(spec["radius"]))
        elif kind == "sinusoid":
            r = (float(spec["base"])
                 + float(spec["amplitude"]) * np.sin(float(spec["frequency"]) * theta))
        elif kind == "table":
            pts = sorted((float(a) % (2 * math.pi), float(b)) for a, b in spec["samples"])
            th = np.array([p[0] for p in pts] + [pts[0][0] + 2 * math.pi])
            rr = np.array([p[1] for p in pts] + [pts[0][1]])
            r = np.interp(np.mod(theta - th[0], 2 * math.pi) + th[0], th, rr)
        else:
            continue
        outlines.append((theta, r))
    return outlines
