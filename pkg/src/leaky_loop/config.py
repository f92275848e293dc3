"""Run configuration: loading, validation and defaults.

A config is a YAML (or JSON) mapping. Every key is optional except
``curve``; see ``README.md`` for the full schema. Example::

    curve: {kind: circle, radius: 1.0}
    samples: 256
    betas: [0.2, 0.1, 0.05, 0.025]
    j_max: 3
    strip: {enabled: true, fine: [256, 128], coarse: [128, 64]}
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError

SCHEMA_VERSION = 1

DEFAULTS: dict[str, Any] = {
    "curve": None,
    "samples": 256,
    "betas": [0.2, 0.1, 0.05, 0.025],
    "count_betas": [0.08, 0.04, 0.02, 0.01],
    "j_max": 3,
    "n_modes": 8,
    "operators": ["S", "S0", "U_plus", "U_minus"],
    "halfwidth": None,
    "transverse": {"halfwidth": None, "n_grid": 256, "grading": 2.0},
    "strip": {
        "enabled": False,
        "fine": [256, 128],
        "coarse": [128, 64],
        "grading": 2.0,
        "n_modes": 3,
        "edge_sign": 1.0,
        "jump_sign": 1.0,
    },
    "ratio_slack": 0.1,
    "weyl_window": 0.1,
    "tolerance_scale": 1.0,
    "format": "json",
    "out": "out",
    "threads": None,
}

_OPERATORS = {"S", "S0", "U_plus", "U_minus"}


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; ``raw`` is the fully resolved mapping."""

    raw: dict

    def __getitem__(self, key):
        return self.raw[key]

    @property
    def strip(self) -> dict:
        return self.raw["strip"]

    @property
    def transverse(self) -> dict:
        return self.raw["transverse"]

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config field '{where}'")
        if isinstance(base[key], dict) and base[key] and value is not None:
            if not isinstance(value, dict):
                raise ConfigError(f"field '{where}' must be a mapping")
            out[key] = _merge(base[key], value, where + ".")
        else:
            out[key] = value
    return out


def _number(value, where, lo=None, hi=None, integer=False, open_lo=True):
    ok_type = isinstance(value, int) if integer else isinstance(value, (int, float))
    if isinstance(value, bool) or not ok_type:
        kind = "an integer" if integer else "a number"
        raise ConfigError(f"field '{where}' must be {kind}, got {value!r}")
    if lo is not None and (value <= lo if open_lo else value < lo):
        raise ConfigError(f"field '{where}' must exceed {lo}, got {value}")
    if hi is not None and value >= hi:
        raise ConfigError(f"field '{where}' must be below {hi}, got {value}")
    return value


def _sweep(values, where):
    if not isinstance(values, list) or not values:
        raise ConfigError(f"field '{where}' must be a non-empty list of couplings")
    for k, b in enumerate(values):
        _number(b, f"{where}[{k}]", 0.0, 1.0)
    if any(b2 >= b1 for b1, b2 in zip(values, values[1:])):
        raise ConfigError(f"field '{where}' must be strictly descending, got {values}")
    return [float(b) for b in values]


def _mesh(value, where, minimum):
    if not (isinstance(value, list) and len(value) == 2):
        raise ConfigError(f"field '{where}' must be a pair [n_s, n_u]")
    for k, (v, m) in enumerate(zip(value, minimum)):
        _number(v, f"{where}[{k}]", integer=True)
        if v < m:
            raise ConfigError(f"field '{where}[{k}]' must be at least {m}, got {v}")
    return value


def validate(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    cfg = _merge(DEFAULTS, raw)
    curve = cfg["curve"]
    if not isinstance(curve, dict) or "kind" not in curve:
        raise ConfigError("field 'curve' must be a mapping with a 'kind'")
    if curve["kind"] not in ("circle", "ellipse", "fourier"):
        raise ConfigError(f"field 'curve.kind' must be circle, ellipse or fourier, got {curve['kind']!r}")
    _number(cfg["samples"], "samples", integer=True)
    if cfg["samples"] < 16:
        raise ConfigError(f"field 'samples' must be at least 16, got {cfg['samples']}")
    cfg["betas"] = _sweep(cfg["betas"], "betas")
    cfg["count_betas"] = _sweep(cfg["count_betas"], "count_betas")
    _number(cfg["j_max"], "j_max", 0, integer=True)
    _number(cfg["n_modes"], "n_modes", 0, integer=True)
    if cfg["n_modes"] < cfg["j_max"]:
        raise ConfigError("field 'n_modes' must be at least 'j_max'")
    ops = cfg["operators"]
    if not isinstance(ops, list) or not ops or not set(ops) <= _OPERATORS:
        raise ConfigError(f"field 'operators' must be a non-empty subset of {sorted(_OPERATORS)}")
    if cfg["halfwidth"] is not None:
        _number(cfg["halfwidth"], "halfwidth", 0.0)
    tr = cfg["transverse"]
    if tr["halfwidth"] is not None:
        _number(tr["halfwidth"], "transverse.halfwidth", 0.0)
    _number(tr["n_grid"], "transverse.n_grid", integer=True)
    _number(tr["grading"], "transverse.grading", 0.0, open_lo=False)
    st = cfg["strip"]
    if not isinstance(st["enabled"], bool):
        raise ConfigError("field 'strip.enabled' must be true or false")
    _mesh(st["fine"], "strip.fine", (32, 16))
    _mesh(st["coarse"], "strip.coarse", (32, 16))
    _number(st["n_modes"], "strip.n_modes", 0, integer=True)
    for key in ("edge_sign", "jump_sign"):
        if st[key] not in (1, -1, 1.0, -1.0):
            raise ConfigError(f"field 'strip.{key}' must be +1 or -1, got {st[key]!r}")
    _number(cfg["ratio_slack"], "ratio_slack", 0.0, open_lo=False)
    _number(cfg["weyl_window"], "weyl_window", 0.0)
    _number(cfg["tolerance_scale"], "tolerance_scale", 0.0)
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError(f"field 'format' must be csv or json, got {cfg['format']!r}")
    if cfg["threads"] is not None:
        _number(cfg["threads"], "threads", 0, integer=True)
    return RunConfig(cfg)


def load_config(path) -> RunConfig:
    """Read and validate a config file; parse errors carry the line and column."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ConfigError(f"{path}: parse error at {where}: {exc.problem}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: parse error: {exc}") from exc
    if raw is None:
        raise ConfigError(f"{path}: empty config")
    return validate(raw)


def dump_resolved(cfg: RunConfig) -> str:
    return json.dumps(cfg.raw, sort_keys=True)
