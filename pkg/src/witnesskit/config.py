"""Run configuration: file loading, schema validation, flag overrides, defaults."""

from __future__ import annotations

import copy
import json
from importlib import resources
from pathlib import Path
from typing import Any, Dict, Optional

import jsonschema
import yaml

EXPERIMENTS = ("pure-thresholds", "table1", "ghz", "xy", "random-scan", "envelope")

_COMMON = {"seed": 0, "out": "results", "jobs": 1}

DEFAULTS: Dict[str, Dict[str, Any]] = {
    "pure-thresholds": {"d": 2, "measure": "haar", "count": 20, "rank": None,
                        "noise": ["depolarizing", "dephasing"]},
    "table1": {"d": 4, "q1": [round(0.1 * i, 1) for i in range(1, 10)], "noise": "depolarizing",
               "optimize": False, "k": 2},
    "ghz": {"noise": "depolarizing", "k": [2], "optimize": True},
    "xy": {"xy": {"n": 4, "j": 1.0, "gamma": 0.5, "h": 0.5, "q": [0.7, 0.3]},
           "noise": ["depolarizing", "dephasing"], "k": [2], "optimize": True},
    "random-scan": {"d": 4, "rank": 4, "count": 10, "measure": "haar", "noise": "depolarizing",
                    "k": 2, "optimize": True},
    "envelope": {"d": 4, "preset": "maxent-vs-product", "sets": ["PPT", "U_tilde2"], "grid_size": 61},
}

OPTIMIZER_DEFAULTS = {"restarts": 8, "steps_per_stage": 100}


class ConfigError(ValueError):
    """Invalid configuration; the command line maps it to exit code 2."""


def load_schema(name: str) -> dict:
    text = resources.files("witnesskit").joinpath("schemas", name).read_text(encoding="utf-8")
    return json.loads(text)


def load_file(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    try:
        # YAML is a superset of JSON, so one loader covers both formats
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config file must contain a mapping at the top level")
    return data


def validate(raw: dict) -> None:
    validator = jsonschema.Draft202012Validator(load_schema("config.schema.json"))
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        lines = [f"  {'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}" for e in errors]
        raise ConfigError("config does not match the schema:\n" + "\n".join(lines))


def _as_list(value):
    return list(value) if isinstance(value, (list, tuple)) else [value]


def resolve(experiment: str, raw: Optional[dict] = None, overrides: Optional[dict] = None) -> dict:
    """Validated, fully-defaulted configuration for ``experiment``.

    ``overrides`` holds command-line values (``None`` entries are ignored); they
    replace the matching top-level keys of the file.
    """
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    raw = copy.deepcopy(raw or {})
    for key, val in (overrides or {}).items():
        if val is not None:
            raw[key] = val
    validate(raw)
    if raw.get("experiment", experiment) != experiment:
        raise ConfigError(f"config is for experiment {raw['experiment']!r}, not {experiment!r}")

    cfg = dict(_COMMON)
    cfg.update(copy.deepcopy(DEFAULTS[experiment]))
    for key, val in raw.items():
        if key == "xy":
            cfg["xy"] = {**cfg.get("xy", {}), **val}
        else:
            cfg[key] = val
    cfg["experiment"] = experiment
    cfg["optimizer"] = {**OPTIMIZER_DEFAULTS, **raw.get("optimizer", {})}
    if "noise" in cfg:
        cfg["noise"] = _as_list(cfg["noise"])
    if "k" in cfg:
        cfg["k"] = _as_list(cfg["k"])
    _check_experiment(cfg)
    return cfg


def _check_experiment(cfg: dict) -> None:
    exp = cfg["experiment"]
    if exp == "pure-thresholds":
        if cfg["d"] not in (2, 3, 4):
            raise ConfigError("pure-thresholds needs d in {2, 3, 4}")
        if cfg["rank"] is not None and cfg["rank"] > cfg["d"] ** 2:
            raise ConfigError("rank cannot exceed d * d")
    if exp == "ghz" and any(k not in (2, 4, 8) for k in cfg["k"]):
        raise ConfigError("ghz supports k in {2, 4, 8}")
    if exp == "random-scan":
        if cfg["rank"] not in (4, 6):
            raise ConfigError("random-scan needs rank in {4, 6}")
        if cfg["d"] != 4 or cfg["k"] != [2]:
            raise ConfigError("random-scan runs at d = 4 with k = 2")
    if exp == "xy":
        xy = cfg["xy"]
        if abs(sum(xy["q"]) - 1.0) > 1e-9:
            raise ConfigError("xy.q must sum to 1")
        if xy["n"] % 2:
            raise ConfigError("xy.n must be even for the half/half split")
    if exp == "table1" and len(cfg["k"]) != 1:
        raise ConfigError("table1 takes a single k")
    if exp == "envelope" and cfg["d"] < 2:
        raise ConfigError("envelope needs d >= 2")
