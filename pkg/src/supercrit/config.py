"""Run configuration: a YAML or JSON document validated against a fixed schema.

Layout::

    model:  {family: power_exp, p: 3.0, ...}
    solver: {rtol: 1e-10, precision: double, ...}
    task:   {mu: 4.0, ...}
    output: {csv: out.csv, json: out.json}

Unknown keys anywhere are rejected.  ``resolve`` fills every default so the
provenance header records the full effective configuration.
"""
from __future__ import annotations

import dataclasses
import json
import os
from typing import Any, Optional

import jsonschema
import yaml

from .errors import DomainError
from .growth import GrowthModel, model_from_spec
from .shooting import SolverConfig

__all__ = ["SCHEMA", "load", "validate", "resolve", "build_model", "build_solver"]

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_posint = {"type": "integer", "minimum": 1}
_numlist = {"type": "array", "items": _num}

MODEL_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["family"],
    "properties": {
        "family": {"enum": ["pure_exp", "power_exp", "iter_exp", "exp_poly"]},
        "p": _pos, "m": _num, "c": _num, "pbar": _num, "log_scale": _num,
        "depth": _posint, "l": _num,
        "w": _numlist,
        "t0": {"type": ["number", "null"]},
        "weight": {"type": "array", "items": _num, "minItems": 1},
    },
}

SOLVER_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "rtol": _pos, "atol": _pos, "r_init_factor": _pos, "max_steps": _posint,
        "event_tol": _pos, "precision": {"enum": ["double", "paired-double"]},
        "checkpoints": {"type": "integer", "minimum": 2}, "hmax_abs": _pos, "hmax_frac": _pos,
        "switch_ratio": _pos, "h0": _pos, "weight_iterations": _posint,
    },
}

TASK_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "mu": _pos, "mu_min": _pos, "mu_max": _pos, "points": {"type": "integer", "minimum": 2},
        "spacing": {"enum": ["log-g", "linear"]},
        "q": {"type": "number", "minimum": 1, "exclusiveMaximum": 2},
        "k": _posint, "tol": _pos,
        "rmin": _pos, "rmax": _pos, "samples": {"type": "integer", "minimum": 2},
        "rbar": _pos, "log_rbar": _num,
        "reference": {"type": "string"},
        "threads": _posint,
        "alphas": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0,
                                              "exclusiveMaximum": 2}},
        "beta": _num,
        "probe": _numlist,
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "model": MODEL_SCHEMA,
        "solver": SOLVER_SCHEMA,
        "task": TASK_SCHEMA,
        "output": {
            "type": "object", "additionalProperties": False,
            "properties": {"csv": {"type": "string"}, "json": {"type": "string"}},
        },
    },
}


def validate(cfg: Any) -> dict:
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise DomainError(f"config error at {where}: {exc.message}") from None
    return cfg


def _parse(text: str, name: str) -> Any:
    try:
        if name.endswith(".json"):
            return json.loads(text)
        return yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise DomainError(f"cannot parse {name}: {exc}") from None


def load(path_or_text: str) -> dict:
    """Read a config file (YAML or JSON); inline JSON/YAML text is accepted too."""
    if os.path.exists(path_or_text):
        with open(path_or_text, encoding="utf-8") as fh:
            data = _parse(fh.read(), path_or_text)
    else:
        data = _parse(path_or_text, "<inline>")
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise DomainError("config must be a mapping")
    # a bare model block is allowed for --model
    if "family" in data:
        data = {"model": data}
    return validate(data)


def build_model(block: Optional[dict]) -> GrowthModel:
    if not block:
        raise DomainError("a model block is required for this command")
    validate({"model": block})
    try:
        return model_from_spec(block)
    except TypeError as exc:
        raise DomainError(f"invalid model parameters: {exc}") from None


def build_solver(block: Optional[dict]) -> SolverConfig:
    return SolverConfig(**(block or {}))


def resolve(cfg: dict) -> dict:
    """Config with every solver default spelled out and the model described."""
    out = json.loads(json.dumps(cfg))
    out["solver"] = dataclasses.asdict(build_solver(cfg.get("solver")))
    if cfg.get("model"):
        out["model_resolved"] = build_model(cfg["model"]).describe()
    return out
