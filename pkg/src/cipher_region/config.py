"""JSON experiment configs.

A config describes the system once and carries optional per-command blocks::

    {
      "symbols": {"source": ["a", "b"]},          # optional labels
      "source": {"a": 0.5, "b": 0.5},             # or [0.5, 0.5]
      "key_channel": [[0.9, 0.1], [0.1, 0.9]],
      "distortion": "hamming",                    # or a matrix, or {"difference": [0, 1]}
      "lambda": 1.0,
      "seed": 0,
      "grid": [0.0, 0.1, 0.5],                    # or {"points": 101}
      "simulate": {...},
      "equivocation": {...},
      "output": {"path": "out.csv", "format": "csv"}
    }

Every parse failure raises :class:`ConfigError` naming the offending field.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from cipher_region.info_core import NORM_TOL, Channel, Pmf
from cipher_region.rd_capacity import DistortionMeasure
from cipher_region.region import SystemSpec

FORMATS = ("csv", "json")


class ConfigError(ValueError):
    pass


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{path}: expected a finite number, got {value!r}")
    return float(value)


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return value


def _vector(value, labels: Optional[list], path: str) -> np.ndarray:
    if isinstance(value, dict):
        if labels is None:
            labels = list(value)
        unknown = [key for key in value if key not in labels]
        if unknown:
            raise ConfigError(f"{path}: unknown symbol {unknown[0]!r}")
        return np.array([_number(value.get(s, 0.0), f"{path}.{s}") for s in labels])
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path}: expected a non-empty array or a symbol->value object")
    if labels is not None and len(value) != len(labels):
        raise ConfigError(f"{path}: has {len(value)} entries, {len(labels)} symbols declared")
    return np.array([_number(v, f"{path}[{i}]") for i, v in enumerate(value)])


def _matrix(value, rows: Optional[list], cols: Optional[list], path: str) -> np.ndarray:
    if isinstance(value, dict):
        if rows is None:
            rows = list(value)
        unknown = [key for key in value if key not in rows]
        if unknown:
            raise ConfigError(f"{path}: unknown symbol {unknown[0]!r}")
        out = [_vector(value.get(r, {}), cols, f"{path}.{r}") for r in rows]
    elif isinstance(value, list) and value:
        if rows is not None and len(value) != len(rows):
            raise ConfigError(f"{path}: has {len(value)} rows, {len(rows)} symbols declared")
        out = [_vector(r, cols, f"{path}[{i}]") for i, r in enumerate(value)]
    else:
        raise ConfigError(f"{path}: expected a non-empty matrix")
    widths = {len(r) for r in out}
    if len(widths) != 1:
        raise ConfigError(f"{path}: rows have different lengths")
    return np.vstack(out)


def _pmf(value, labels, path: str) -> Pmf:
    p = _vector(value, labels, path)
    if np.any(p < 0):
        raise ConfigError(f"{path}: negative probability")
    if abs(p.sum() - 1.0) > NORM_TOL:
        raise ConfigError(f"{path}: probabilities sum to {p.sum()!r}, expected 1")
    return Pmf(p)


def _channel(value, rows, cols, path: str) -> Channel:
    w = _matrix(value, rows, cols, path)
    for i, row in enumerate(w):
        if np.any(row < 0):
            raise ConfigError(f"{path}[{i}]: negative transition probability")
        if abs(row.sum() - 1.0) > NORM_TOL:
            raise ConfigError(f"{path}[{i}]: row {i} sums to {row.sum()!r}, expected 1")
    return Channel(w)


def _distortion(value, rows, cols, k: int, path: str) -> DistortionMeasure:
    if value == "hamming":
        return DistortionMeasure.hamming(k)
    if isinstance(value, dict) and set(value) == {"difference"}:
        rho = _vector(value["difference"], rows, f"{path}.difference")
        if len(rho) != k:
            raise ConfigError(f"{path}.difference: needs {k} entries")
        return DistortionMeasure.difference(rho)
    m = _matrix(value, rows, cols, path)
    if np.any(m < 0):
        raise ConfigError(f"{path}: distortion entries must be >= 0")
    if m.shape[0] != k:
        raise ConfigError(f"{path}: has {m.shape[0]} rows, source has {k} symbols")
    return DistortionMeasure(m)


@dataclass
class ExperimentConfig:
    spec: Optional[SystemSpec]
    key_channel: Optional[Channel]
    seed: int = 0
    tol: Optional[float] = None
    grid: Optional[list] = None
    grid_points: Optional[int] = None
    simulate: dict = field(default_factory=dict)
    equivocation: dict = field(default_factory=dict)
    output_path: Optional[str] = None
    output_format: Optional[str] = None
    symbols: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def require_spec(self) -> SystemSpec:
        if self.spec is None:
            raise ConfigError("config needs 'source', 'key_channel' and 'distortion'")
        return self.spec

    def require_channel(self) -> Channel:
        if self.key_channel is None:
            raise ConfigError("config needs 'key_channel'")
        return self.key_channel


def parse_config(data: Any) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    symbols = data.get("symbols", {})
    if not isinstance(symbols, dict):
        raise ConfigError("symbols: expected an object")
    for key, labels in symbols.items():
        if not (isinstance(labels, list) and all(isinstance(s, str) for s in labels)):
            raise ConfigError(f"symbols.{key}: expected a list of strings")
        if len(set(labels)) != len(labels):
            raise ConfigError(f"symbols.{key}: duplicate labels")
    src_labels = symbols.get("source")
    rep_labels = symbols.get("reproduction", src_labels)
    x_labels = symbols.get("channel_input")
    y_labels = symbols.get("channel_output")

    channel_value = data.get("key_channel", data.get("channel"))
    channel_key = "key_channel" if "key_channel" in data else "channel"
    key_channel = None
    if channel_value is not None:
        key_channel = _channel(channel_value, x_labels, y_labels, channel_key)

    spec = None
    if "source" in data:
        source = _pmf(data["source"], src_labels, "source")
        if isinstance(data["source"], dict) and src_labels is None:
            src_labels = list(data["source"])
            rep_labels = rep_labels or src_labels
        dist = _distortion(
            data.get("distortion", "hamming"), src_labels, rep_labels, source.alphabet_size, "distortion"
        )
        lam = _number(data.get("lambda", 1.0), "lambda")
        if lam < 0:
            raise ConfigError("lambda: must be >= 0")
        if key_channel is None:
            raise ConfigError("key_channel: required alongside 'source'")
        spec = SystemSpec(source, key_channel, dist, lam)

    seed = _integer(data.get("seed", 0), "seed")
    tol = data.get("tol")
    if tol is not None:
        tol = _number(tol, "tol")
        if tol <= 0:
            raise ConfigError("tol: must be > 0")

    grid = grid_points = None
    if "grid" in data:
        g = data["grid"]
        if isinstance(g, dict):
            if set(g) != {"points"}:
                raise ConfigError("grid: object form takes only 'points'")
            grid_points = _integer(g["points"], "grid.points")
            if grid_points < 1:
                raise ConfigError("grid.points: must be >= 1")
        elif isinstance(g, list):
            grid = [_number(v, f"grid[{i}]") for i, v in enumerate(g)]
        else:
            raise ConfigError("grid: expected an array of D values or {'points': n}")

    for block in ("simulate", "equivocation", "output"):
        if block in data and not isinstance(data[block], dict):
            raise ConfigError(f"{block}: expected an object")
    output = data.get("output", {})
    fmt = output.get("format")
    if fmt is not None and fmt not in FORMATS:
        raise ConfigError(f"output.format: expected one of {FORMATS}, got {fmt!r}")
    path = output.get("path")
    if path is not None and not isinstance(path, str):
        raise ConfigError("output.path: expected a string")

    return ExperimentConfig(
        spec=spec,
        key_channel=key_channel,
        seed=seed,
        tol=tol,
        grid=grid,
        grid_points=grid_points,
        simulate=dict(data.get("simulate", {})),
        equivocation=dict(data.get("equivocation", {})),
        output_path=path,
        output_format=fmt,
        symbols=symbols,
        raw=data,
    )


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(data)


def field_number(block: dict, key: str, path: str, default=None) -> float:
    if key not in block:
        if default is None:
            raise ConfigError(f"{path}.{key}: required")
        return default
    return _number(block[key], f"{path}.{key}")


def field_integer(block: dict, key: str, path: str, default=None) -> int:
    if key not in block:
        if default is None:
            raise ConfigError(f"{path}.{key}: required")
        return default
    return _integer(block[key], f"{path}.{key}")


def field_pmf(block: dict, key: str, labels, path: str) -> Pmf:
    if key not in block:
        raise ConfigError(f"{path}.{key}: required")
    return _pmf(block[key], labels, f"{path}.{key}")
