"""Problem definition documents.

A problem document is a YAML mapping with an explicit schema version:

    schema: 1
    kind: linear_system
    # either synthetic...
    dim: 4
    seed: 7
    # ...or explicit operators as expression literals
    operators:
      A: [["2 + sin(t)", "0.5"], ["0.5", "2 + cos(t)"]]
      b: ["sin(2*t)", "1"]
    params: {cubic: 0.5}    # explicit mode only
    horizon: 2.0            # optional default for the runner

Operator entries use the closed expression language (numbers, t, pi,
sin/cos/exp, arithmetic). Unknown keys are errors.
"""

from __future__ import annotations

import os

import numpy as np
import yaml

from .errors import ConfigError, ZnnError
from .exprlang import compile_matrix
from .operators import TimeVaryingOperator
from .problems import KINDS, ProblemInstance, make_synthetic

__all__ = ["PROBLEM_KEYS", "load_problem_document", "build_problem"]

PROBLEM_KEYS = frozenset(
    {"schema", "kind", "dim", "seed", "operators", "params", "horizon"})


def load_problem_document(path: str) -> dict:
    if not os.path.exists(path):
        raise ConfigError(f"problem file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"problem file {path} is not valid YAML: {exc}")
    if not isinstance(doc, dict):
        raise ConfigError(f"problem file {path} must be a mapping")
    return doc


def _check_keys(doc: dict, where: str) -> None:
    unknown = set(doc) - PROBLEM_KEYS
    if unknown:
        raise ConfigError(
            f"unknown problem keys in {where}: {', '.join(sorted(unknown))}")
    if doc.get("schema") != 1:
        raise ConfigError(f"{where} must declare schema: 1")


def _state_dim_from_shapes(kind: str, shapes: dict) -> int:
    if kind in ("linear_system", "nonlinear_stationarity", "dqm"):
        return shapes["A"][0]
    if kind == "equality_qp":
        return shapes["A"][0] + shapes["D"][0]
    if kind == "linear_eq_ineq":
        return shapes["A"][1] + shapes["C"][0]
    if kind in ("stein", "sylvester"):
        return int(np.prod(shapes["C"]))
    # square matrix unknowns: inversion, square root, lyapunov, yang_baxter
    return int(np.prod(shapes["A"]))


def build_problem(doc: dict, where: str = "problem") -> ProblemInstance:
    """Build a ProblemInstance from a validated problem mapping."""
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} must be a mapping")
    _check_keys(doc, where)
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"{where}: unknown problem kind {kind!r}")

    literals = doc.get("operators")
    if literals is None:
        if "params" in doc:
            raise ConfigError(
                f"{where}: params requires explicit operators")
        dim = doc.get("dim")
        if not isinstance(dim, int) or isinstance(dim, bool):
            raise ConfigError(f"{where}: synthetic problems need integer dim")
        seed = doc.get("seed", 0)
        try:
            return make_synthetic(kind, dim, seed=seed)
        except ZnnError as exc:
            raise ConfigError(f"{where}: {exc}")

    if not isinstance(literals, dict):
        raise ConfigError(f"{where}: operators must map names to literals")
    try:
        ops = {name: TimeVaryingOperator(compile_matrix(lit))
               for name, lit in literals.items()}
        shapes = {name: op(0.0).shape for name, op in ops.items()}
        state_dim = _state_dim_from_shapes(kind, shapes)
        params = doc.get("params") or {}
        if not isinstance(params, dict):
            raise ConfigError(f"{where}: params must be a mapping")
        return ProblemInstance(kind, ops, state_dim, params=params)
    except ConfigError:
        raise
    except KeyError as exc:
        raise ConfigError(f"{where}: kind {kind!r} needs operator {exc}")
    except ZnnError as exc:
        raise ConfigError(f"{where}: {exc}")
