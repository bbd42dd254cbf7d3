"""Experiment configuration: schema, defaults, file/flag parsing.

Configs are nested JSON objects; flags address leaves with dotted keys
(``nonlinearity.theta``) and override file values. Unknown keys are rejected
by name. Every leaf has a default, and the fully defaulted config runs the
whole pipeline: cubic theta=0.25, N=2, dr=0.05, moving frame, t_final=400.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from .errors import ConfigError

_UNSET = object()


def _positive(name):
    def check(v):
        if v <= 0:
            raise ConfigError(f"{name} must be positive, got {v}")
    return check


def _theta_range(v):
    if not 0.0 < v < 0.5:
        raise ConfigError(f"nonlinearity.theta must lie in (0, 1/2), got {v}")


def _frame(v):
    if v not in ("lab", "moving"):
        raise ConfigError(f"grid.frame must be 'lab' or 'moving', got {v!r}")


def _datum_kind(v):
    if v not in ("ball_indicator", "smoothed_ball", "profile_cap"):
        raise ConfigError(f"initial.kind unknown: {v!r}")


def _shape(v):
    if v not in ("ellipse", "circle", "star"):
        raise ConfigError(f"initial.shape unknown: {v!r}")


def _fit_mode(v):
    if v not in ("full", "fixed_speed", "const"):
        raise ConfigError(f"fit.mode unknown: {v!r}")


def _cert_system(v):
    if v not in ("41", "310"):
        raise ConfigError(f"certificate.system must be '41' or '310', got {v!r}")


# section -> key -> (type, default, validator or None)
SCHEMA: dict[str, dict[str, tuple]] = {
    "nonlinearity": {
        "kind": (str, "cubic", None),
        "theta": (float, 0.25, _theta_range),
        "table_path": (str, "", None),
    },
    "dimension": {
        "N": (int, 2, _positive("dimension.N")),
    },
    "grid": {
        "dr": (float, 0.05, _positive("grid.dr")),
        "n_angles": (int, 256, _positive("grid.n_angles")),
        "frame": (str, "moving", _frame),
        "window_lo": (float, math.nan, None),   # nan -> auto placement
        "window_hi": (float, math.nan, None),
        "r_max": (float, math.nan, None),
    },
    "time": {
        "t_start": (float, 1.0, _positive("time.t_start")),
        "t_final": (float, 400.0, _positive("time.t_final")),
        "snapshot_every": (float, 10.0, _positive("time.snapshot_every")),
        "dt": (float, math.nan, None),           # nan -> staged automatic
        "dt_cap": (float, 0.02, _positive("time.dt_cap")),
    },
    "initial": {
        "kind": (str, "ball_indicator", _datum_kind),
        "R1": (float, 10.0, _positive("initial.R1")),
        "R2": (float, 10.0, _positive("initial.R2")),
        "width": (float, 0.0, None),
        "shape": (str, "ellipse", _shape),
        "a": (float, 30.0, _positive("initial.a")),
        "b": (float, 20.0, _positive("initial.b")),
        "m": (int, 3, _positive("initial.m")),
        "eps_shape": (float, 0.1, None),
        "rbar": (float, 25.0, _positive("initial.rbar")),
        "smoothing": (float, 0.0, None),
    },
    "fit": {
        "level": (float, 0.5, None),
        "mode": (str, "fixed_speed", _fit_mode),
        "window_lo": (float, math.nan, None),
        "window_hi": (float, math.nan, None),
    },
    "certificate": {
        "system": (str, "41", _cert_system),
        "delta": (float, 1.0, _positive("certificate.delta")),
        "gamma": (float, 1.0, _positive("certificate.gamma")),
        "eta": (float, 0.01, None),
        "C_const": (float, 1.0, None),
        "eps": (float, 0.1, _positive("certificate.eps")),
        "T_start": (float, 1e3, _positive("certificate.T_start")),
        "t_final": (float, 1.2e5, _positive("certificate.t_final")),
        "F_lipschitz": (float, 1.0, _positive("certificate.F_lipschitz")),
    },
    "profile": {
        "tol": (float, 1e-6, _positive("profile.tol")),
    },
    "output": {
        "seed": (int, 0, None),
        "threads": (int, 1, _positive("output.threads")),
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated configuration tree; access via cfg['section.key']."""

    values: dict

    def __getitem__(self, dotted: str) -> Any:
        section, key = dotted.split(".", 1)
        return self.values[section][key]

    def section(self, name: str) -> dict:
        return dict(self.values[name])

    def canonical_json(self) -> str:
        return json.dumps(self.values, sort_keys=True, indent=2,
                          allow_nan=True)

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:12]


def _defaults() -> dict:
    return {s: {k: spec[1] for k, spec in keys.items()}
            for s, keys in SCHEMA.items()}


def _coerce(section: str, key: str, value: Any) -> Any:
    typ, _default, validator = SCHEMA[section][key]
    if typ is float and isinstance(value, (int, float)) \
            and not isinstance(value, bool):
        value = float(value)
    elif typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                value = int(value)
            elif isinstance(value, str) and value.lstrip("+-").isdigit():
                value = int(value)
            else:
                raise ConfigError(
                    f"{section}.{key} expects an integer, got {value!r}"
                )
    elif typ is str and not isinstance(value, str):
        raise ConfigError(f"{section}.{key} expects a string, got {value!r}")
    if typ is float and isinstance(value, str):
        try:
            value = float(value)
        except ValueError:
            raise ConfigError(f"{section}.{key} expects a number, got {value!r}")
    if not isinstance(value, typ):
        raise ConfigError(
            f"{section}.{key} expects {typ.__name__}, got {type(value).__name__}"
        )
    if validator is not None and not (isinstance(value, float)
                                      and math.isnan(value)):
        validator(value)
    return value


def parse_config(path: Optional[str] = None,
                 overrides: Optional[dict[str, Any]] = None) -> ExperimentConfig:
    """Build a validated config from an optional JSON file plus dotted overrides.

    Overrides (command-line flags) win over file values; unknown sections or
    keys are rejected by name.
    """
    values = _defaults()

    if path:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}")
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
        for section, keys in data.items():
            if section not in SCHEMA:
                raise ConfigError(f"unknown config section {section!r}")
            if not isinstance(keys, dict):
                raise ConfigError(f"section {section!r} must be an object")
            for key, value in keys.items():
                if key not in SCHEMA[section]:
                    raise ConfigError(f"unknown config key {section}.{key}")
                values[section][key] = _coerce(section, key, value)

    for dotted, value in (overrides or {}).items():
        if value is _UNSET or value is None:
            continue
        if "." not in dotted:
            raise ConfigError(f"override key must be dotted, got {dotted!r}")
        section, key = dotted.split(".", 1)
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown config key {dotted}")
        values[section][key] = _coerce(section, key, value)

    if values["initial"]["R1"] > values["initial"]["R2"]:
        raise ConfigError("initial.R1 must not exceed initial.R2")
    return ExperimentConfig(values=values)


def auto_window(N_dim: int, c_star: float, width: float = 80.0,
                margin: float = 1.0) -> tuple[float, float]:
    """Moving window placed right of the frame origin's lowest excursion.

    R(t) = c* t - k ln t dips to k(1 - ln(k/c*)) at t = k/c*; the left edge
    must exceed minus that dip for the physical radius to stay positive on
    runs crossing it.
    """
    k = (N_dim - 1) / c_star
    if k <= 0:
        dip = c_star
    else:
        t_star = k / c_star
        dip = c_star * t_star - k * math.log(t_star) if t_star > 1.0 else c_star
    lo = max(margin, margin - dip)
    return lo, lo + width
