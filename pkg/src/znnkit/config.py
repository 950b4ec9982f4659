"""Experiment configuration documents.

One YAML mapping per run, schema-versioned, unknown keys rejected:

    schema: 1
    seed: 7
    horizon: 2.0          # or steps: N
    output_dir: out
    x0: zeros             # zeros | truth | [numbers]
    problem:  {file: problems/dqm.yaml}        # or inline problem mapping
    evolution: {formula: original, gamma: 10.0, activation: {kind: linear}}
    scheme:   {kind: euler_forward, eta: 1.0e-3, strict: false}
    noise:    {kind: constant, magnitude: 1.0}  # optional
    sweep:    {noise_kind: constant, magnitudes: [...], formulas: {...}}
    order:    {halvings: 4, eta0: 4.0e-3, horizon: 3.0, schemes: [...]}
    scenario: {file: scenario.yaml}             # or inline, for tdoa runs

File references are inlined at load time so the config digest covers the
actual content that ran.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import yaml

from . import evolution as evo
from .activations import Bounded, Linear, PowerSigmoid, SignBiPower
from .analysis import make_noise
from .discretize import SCHEME_KINDS, Scheme
from .errors import ConfigError, ZnnError
from .exprlang import compile_matrix
from .noise import NoiseSpec
from .positioning import DEFAULT_SPEED, Scenario
from .probfile import PROBLEM_KEYS, build_problem, load_problem_document
from .projection import Box, ProjectionActivation, SphereShell

__all__ = ["ExperimentConfig", "load_config", "config_from_mapping",
           "build_activation", "build_evolution", "build_scheme",
           "build_noise", "build_scenario", "build_x0"]

_TOP_KEYS = frozenset(
    {"schema", "seed", "horizon", "steps", "output_dir", "x0", "problem",
     "evolution", "scheme", "noise", "sweep", "order", "scenario"})
_SCENARIO_KEYS = frozenset(
    {"schema", "observers", "v", "target_path", "horizon", "eta",
     "delay_noise"})


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed experiment document plus the resolved mapping it hashes to."""

    seed: int = 0
    horizon: Optional[float] = None
    steps: Optional[int] = None
    output_dir: str = "out"
    x0: object = "zeros"
    problem: Optional[dict] = None
    evolution: Optional[dict] = None
    scheme: Optional[dict] = None
    noise: Optional[dict] = None
    sweep: Optional[dict] = None
    order: Optional[dict] = None
    scenario: Optional[dict] = None
    resolved: dict = field(default_factory=dict)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        resolved = dict(self.resolved)
        resolved["seed"] = int(seed)
        return replace(self, seed=int(seed), resolved=resolved)


def _require_mapping(doc, where: str) -> dict:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} must be a mapping")
    return doc


def _check_keys(doc: dict, allowed, where: str) -> None:
    unknown = set(doc) - set(allowed)
    if unknown:
        raise ConfigError(
            f"unknown keys in {where}: {', '.join(sorted(unknown))}")


def _resolve_file_section(section, keys, where: str, base_dir: str,
                          loader) -> dict:
    section = _require_mapping(section, where)
    if "file" in section:
        if len(section) != 1:
            raise ConfigError(
                f"{where}: file reference cannot mix with inline keys")
        path = os.path.join(base_dir, str(section["file"]))
        return loader(path)
    _check_keys(section, keys, where)
    return section


def _load_scenario_document(path: str) -> dict:
    if not os.path.exists(path):
        raise ConfigError(f"scenario file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"scenario file {path} is not valid YAML: {exc}")
    doc = _require_mapping(doc, f"scenario file {path}")
    _check_keys(doc, _SCENARIO_KEYS, f"scenario file {path}")
    if doc.get("schema") != 1:
        raise ConfigError(f"scenario file {path} must declare schema: 1")
    return doc


def config_from_mapping(doc: dict, base_dir: str = ".") -> ExperimentConfig:
    doc = _require_mapping(doc, "config")
    _check_keys(doc, _TOP_KEYS, "config")
    if doc.get("schema") != 1:
        raise ConfigError("config must declare schema: 1")

    resolved = dict(doc)
    if "problem" in doc:
        resolved["problem"] = _resolve_file_section(
            doc["problem"], PROBLEM_KEYS, "problem", base_dir,
            load_problem_document)
    if "scenario" in doc:
        resolved["scenario"] = _resolve_file_section(
            doc["scenario"], _SCENARIO_KEYS, "scenario", base_dir,
            _load_scenario_document)

    seed = resolved.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError(f"seed must be an integer, got {seed!r}")
    horizon = resolved.get("horizon")
    if horizon is not None and float(horizon) <= 0:
        raise ConfigError(f"horizon must be positive, got {horizon}")
    steps = resolved.get("steps")
    if steps is not None and (not isinstance(steps, int) or steps < 1):
        raise ConfigError(f"steps must be a positive integer, got {steps!r}")

    return ExperimentConfig(
        seed=seed,
        horizon=None if horizon is None else float(horizon),
        steps=steps,
        output_dir=str(resolved.get("output_dir", "out")),
        x0=resolved.get("x0", "zeros"),
        problem=resolved.get("problem"),
        evolution=resolved.get("evolution"),
        scheme=resolved.get("scheme"),
        noise=resolved.get("noise"),
        sweep=resolved.get("sweep"),
        order=resolved.get("order"),
        scenario=resolved.get("scenario"),
        resolved=resolved,
    )


def load_config(path: str) -> ExperimentConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}")
    return config_from_mapping(_require_mapping(doc, f"config file {path}"),
                               base_dir=os.path.dirname(path) or ".")


_ACTIVATION_KEYS = {
    "linear": set(),
    "power_sigmoid": {"p", "xi"},
    "sign_bi_power": {"r"},
    "bounded": {"limit"},
    "projection": {"set"},
}


def _build_projection_set(doc):
    doc = _require_mapping(doc, "projection set")
    kind = doc.get("kind")
    if kind == "box":
        _check_keys(doc, {"kind", "lo", "hi"}, "box set")
        return Box(lo=doc["lo"], hi=doc["hi"])
    if kind == "sphere_shell":
        _check_keys(doc, {"kind", "r_inner", "r_outer"}, "sphere_shell set")
        return SphereShell(r_inner=doc["r_inner"], r_outer=doc["r_outer"])
    raise ConfigError(f"unknown projection set kind {kind!r}")


def build_activation(doc) -> object:
    if doc is None:
        return Linear()
    doc = _require_mapping(doc, "activation")
    kind = doc.get("kind")
    if kind not in _ACTIVATION_KEYS:
        raise ConfigError(f"unknown activation kind {kind!r}")
    _check_keys(doc, _ACTIVATION_KEYS[kind] | {"kind"}, f"activation {kind}")
    try:
        if kind == "linear":
            return Linear()
        if kind == "power_sigmoid":
            return PowerSigmoid(p=doc.get("p", 3), xi=doc.get("xi", 4.0))
        if kind == "sign_bi_power":
            return SignBiPower(r=doc.get("r", 0.5))
        if kind == "bounded":
            return Bounded(limit=doc.get("limit", 1.0))
        return ProjectionActivation(_build_projection_set(doc.get("set")))
    except ZnnError as exc:
        raise ConfigError(f"activation {kind}: {exc}")


_FORMULA_KEYS = {
    "original": {"gamma", "activation"},
    "varying_parameter": {"schedule", "activation"},
    "noise_tolerant": {"gamma", "beta"},
    "finite_time": {"gamma", "a1", "a2", "b", "c", "activation"},
    "activated_noise_tolerant": {"gamma", "beta", "psi1", "psi2"},
}


def _build_schedule(doc):
    if doc is None:
        return evo.PowerRamp()
    doc = _require_mapping(doc, "schedule")
    kind = doc.get("kind")
    if kind == "constant":
        _check_keys(doc, {"kind", "gamma"}, "constant schedule")
        return evo.Constant(gamma=doc.get("gamma", 1.0))
    if kind == "power_ramp":
        _check_keys(doc, {"kind", "gamma", "p"}, "power_ramp schedule")
        return evo.PowerRamp(gamma=doc.get("gamma", 1.0), p=doc.get("p", 2.0))
    raise ConfigError(f"unknown schedule kind {kind!r}")


def build_evolution(doc) -> evo.EvolutionSpec:
    doc = _require_mapping(doc, "evolution")
    formula = doc.get("formula")
    if formula not in _FORMULA_KEYS:
        raise ConfigError(f"unknown evolution formula {formula!r}")
    _check_keys(doc, _FORMULA_KEYS[formula] | {"formula"},
                f"evolution {formula}")
    try:
        if formula == "original":
            return evo.Original(gamma=doc.get("gamma", 1.0),
                                activation=build_activation(doc.get("activation")))
        if formula == "varying_parameter":
            return evo.VaryingParameter(
                schedule=_build_schedule(doc.get("schedule")),
                activation=build_activation(doc.get("activation")))
        if formula == "noise_tolerant":
            return evo.NoiseTolerant(gamma=doc.get("gamma", 1.0),
                                     beta=doc.get("beta", 1.0))
        if formula == "finite_time":
            return evo.FiniteTime(
                gamma=doc.get("gamma", 1.0), a1=doc.get("a1", 1.0),
                a2=doc.get("a2", 1.0), b=doc.get("b", 3), c=doc.get("c", 1),
                activation=build_activation(doc.get("activation")))
        return evo.ActivatedNoiseTolerant(
            gamma=doc.get("gamma", 1.0), beta=doc.get("beta", 1.0),
            psi1=build_activation(doc.get("psi1")),
            psi2=build_activation(doc.get("psi2")))
    except ZnnError as exc:
        raise ConfigError(f"evolution {formula}: {exc}")


def build_scheme(doc, default_eta: Optional[float] = None) -> Scheme:
    if doc is None and default_eta is not None:
        return Scheme("euler_forward", default_eta)
    doc = _require_mapping(doc, "scheme")
    _check_keys(doc, {"kind", "eta", "strict"}, "scheme")
    kind = doc.get("kind", "euler_forward")
    if kind not in SCHEME_KINDS:
        raise ConfigError(f"unknown scheme kind {kind!r}")
    eta = doc.get("eta", default_eta)
    if eta is None:
        raise ConfigError("scheme needs eta")
    try:
        return Scheme(kind, float(eta), strict=bool(doc.get("strict", False)))
    except ZnnError as exc:
        raise ConfigError(f"scheme: {exc}")


def build_noise(doc, default_seed: int = 0) -> Optional[NoiseSpec]:
    if doc is None:
        return None
    doc = _require_mapping(doc, "noise")
    _check_keys(doc, {"kind", "magnitude", "seed"}, "noise")
    if "kind" not in doc or "magnitude" not in doc:
        raise ConfigError("noise needs kind and magnitude")
    try:
        return make_noise(doc["kind"], float(doc["magnitude"]),
                          seed=doc.get("seed", default_seed))
    except ZnnError as exc:
        raise ConfigError(f"noise: {exc}")


def build_scenario(doc, default_seed: int = 0):
    """Scenario mapping -> (Scenario, delay noise spec or None)."""
    doc = _require_mapping(doc, "scenario")
    _check_keys(doc, _SCENARIO_KEYS, "scenario")
    for key in ("observers", "target_path", "horizon", "eta"):
        if key not in doc:
            raise ConfigError(f"scenario needs {key}")
    try:
        path = compile_matrix(doc["target_path"])
        observers = np.asarray(doc["observers"], dtype=float)
        scenario = Scenario(
            observers=observers, target_path=path,
            horizon=float(doc["horizon"]), eta=float(doc["eta"]),
            v=float(doc.get("v", DEFAULT_SPEED)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"scenario: {exc}")
    except ZnnError as exc:
        raise ConfigError(f"scenario: {exc}")
    return scenario, build_noise(doc.get("delay_noise"), default_seed)


def build_x0(cfg_x0, problem) -> np.ndarray:
    if isinstance(cfg_x0, str):
        if cfg_x0 == "zeros":
            return np.zeros(problem.state_dim)
        if cfg_x0 == "truth":
            if problem.ground_truth is None:
                raise ConfigError("x0: truth requires a known ground truth")
            return np.atleast_1d(np.asarray(problem.ground_truth(0.0),
                                            dtype=float)).ravel()
        raise ConfigError(f"x0 must be zeros, truth, or a number list, "
                          f"got {cfg_x0!r}")
    try:
        x0 = np.asarray(cfg_x0, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"x0 is not a number list: {cfg_x0!r}")
    if x0.shape != (problem.state_dim,):
        raise ConfigError(
            f"x0 has shape {x0.shape}, problem needs ({problem.state_dim},)")
    return x0
