"""YAML experiment configuration.

Top-level keys::

    arms:         list of {family: <name>, <params>}
    policy:       {name: dmed|ucb1|egreedy, <params>}
    horizon:      int
    replications: int
    seed:         int
    checkpoints:  list of int (optional, defaults to [horizon])
    ldp:          optional verifier block, see LDP_DEFAULT
"""
from __future__ import annotations

import copy
from pathlib import Path
from typing import Any, Mapping

import yaml

from .models import FAMILY_KEYS, model_from_dict
from .simulation import ExperimentConfig

LDP_DEFAULT: dict[str, Any] = {
    "trials": 100_000,
    "seed": 2024,
    "cells": [
        {"kind": "lower", "model": {"family": "bernoulli", "p": 0.5}, "mu": 0.75, "t": [10, 50, 200], "thresholds": [0.02, 0.05, 0.1]},
        {"kind": "lower", "model": {"family": "shifted_neg_exponential", "rate": 1.0}, "mu": 0.5, "t": [10, 50, 200], "thresholds": [0.02, 0.05, 0.1]},
        {"kind": "upper", "model": {"family": "bernoulli", "p": 0.7}, "mu": 0.5, "t": [10, 50, 200], "thresholds": [0.05, 0.2, 0.5]},
    ],
}


class ConfigError(ValueError):
    """Bad or missing configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"{key}: {message}")
        self.key = key


def load_document(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config", f"file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"not valid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config", "top level must be a mapping")
    return doc


def parse_arms(doc: Mapping[str, Any]) -> list:
    arms = doc.get("arms")
    if not isinstance(arms, list) or len(arms) < 2:
        raise ConfigError("arms", "need a list of at least two arm models")
    out = []
    for k, spec in enumerate(arms):
        key = f"arms[{k}]"
        if not isinstance(spec, dict):
            raise ConfigError(key, "must be a mapping with a 'family' key")
        try:
            out.append(model_from_dict(spec))
        except KeyError as exc:
            raise ConfigError(f"{key}.{exc.args[0]}", f"missing; families take {FAMILY_KEYS}") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(key, str(exc)) from None
    return out


def _int(doc: Mapping[str, Any], key: str, default: Any = None) -> int:
    value = doc.get(key, default)
    if value is None:
        raise ConfigError(key, "missing")
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(key, f"expected an integer, got {value!r}")
    return value


def parse_experiment(doc: Mapping[str, Any]) -> ExperimentConfig:
    arms = parse_arms(doc)
    policy = doc.get("policy", {"name": "dmed", "r": 0.1})
    if not isinstance(policy, dict) or "name" not in policy:
        raise ConfigError("policy", "must be a mapping with a 'name' key")
    checkpoints = doc.get("checkpoints", [])
    if not isinstance(checkpoints, list) or not all(isinstance(c, int) for c in checkpoints):
        raise ConfigError("checkpoints", "expected a list of integers")
    try:
        return ExperimentConfig(
            arms=arms,
            policy=dict(policy),
            horizon=_int(doc, "horizon"),
            replications=_int(doc, "replications", 1),
            seed=_int(doc, "seed", 0),
            checkpoints=list(checkpoints),
        )
    except ValueError as exc:
        raise ConfigError("experiment", str(exc)) from None


def parse_ldp(doc: Mapping[str, Any]) -> dict[str, Any]:
    block = doc.get("ldp")
    if block is None:
        block = copy.deepcopy(LDP_DEFAULT)
    if not isinstance(block, dict):
        raise ConfigError("ldp", "must be a mapping")
    out = {"trials": _int(block, "trials", LDP_DEFAULT["trials"]), "seed": _int(block, "seed", LDP_DEFAULT["seed"])}
    cells = block.get("cells", LDP_DEFAULT["cells"])
    if not isinstance(cells, list) or not cells:
        raise ConfigError("ldp.cells", "expected a non-empty list")
    parsed = []
    for k, cell in enumerate(cells):
        key = f"ldp.cells[{k}]"
        if not isinstance(cell, dict):
            raise ConfigError(key, "must be a mapping")
        for name in ("kind", "model", "mu", "t", "thresholds"):
            if name not in cell:
                raise ConfigError(f"{key}.{name}", "missing")
        if cell["kind"] not in ("lower", "upper"):
            raise ConfigError(f"{key}.kind", "must be 'lower' or 'upper'")
        try:
            model = model_from_dict(cell["model"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{key}.model", str(exc)) from None
        parsed.append({**cell, "model": model})
    out["cells"] = parsed
    return out
