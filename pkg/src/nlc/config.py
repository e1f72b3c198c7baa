"""YAML run configuration.

Recognised keys (nested ``grid: {sizes: ...}`` or dotted ``grid.sizes`` both work)::

    gamma, mu, kappa, nu, theta      model constants
    lambda                           one value or a list (the sweep values)
    delta0, seed, s                  well-prepared data
    grid.sizes                       e.g. [64, 64]
    init.profile                     taylor_green | rest
    t_end, dt, scheme, floor_probe   run control (dt omitted -> acoustic-resolving default)
"""

from __future__ import annotations

from dataclasses import fields
from pathlib import Path

import yaml

from .sweep import SweepConfig

KEYMAP = {
    "gamma": "gamma",
    "mu": "mu",
    "kappa": "kappa",
    "nu": "nu",
    "theta": "theta",
    "lambda": "lambdas",
    "delta0": "delta0",
    "seed": "seed",
    "s": "s",
    "grid.sizes": "sizes",
    "init.profile": "profile",
    "t_end": "t_end",
    "dt": "dt",
    "scheme": "scheme",
    "floor_probe": "floor_probe",
}


class ConfigError(ValueError):
    pass


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def config_from_mapping(raw: dict) -> SweepConfig:
    flat = _flatten(raw or {})
    unknown = sorted(set(flat) - set(KEYMAP))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    kw = {}
    for key, value in flat.items():
        name = KEYMAP[key]
        if name == "lambdas":
            value = tuple(float(x) for x in (value if isinstance(value, (list, tuple)) else [value]))
        elif name == "sizes":
            value = tuple(int(x) for x in value)
        elif name in ("seed", "s"):
            value = int(value)
        elif name in ("profile", "scheme"):
            value = str(value)
        elif name == "floor_probe":
            value = bool(value)
        elif value is not None:
            value = float(value)
        kw[name] = value
    return SweepConfig(**kw)


def load_config(path) -> SweepConfig:
    with Path(path).open() as fh:
        return config_from_mapping(yaml.safe_load(fh))


def defaults_text() -> str:
    cfg = SweepConfig()
    inverse = {v: k for k, v in KEYMAP.items()}
    return ", ".join(f"{inverse[f.name]}={getattr(cfg, f.name)!r}" for f in fields(cfg))
