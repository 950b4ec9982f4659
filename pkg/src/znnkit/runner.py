"""Experiment runner: builds models from a config and writes artifacts.

All outputs are deterministic functions of (config, seed): no timestamps,
keys sorted, floats at round-trip precision. Files are written atomically
(temp file + rename) and every run ends with a manifest.json recording the
tool version and the SHA-256 digest of the resolved config.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile

import numpy as np

from . import __version__
from .analysis import fit_convergence_rate, noise_sweep, order_report
from .config import (ExperimentConfig, build_evolution, build_noise,
                     build_scenario, build_scheme, build_x0)
from .discretize import integrate_reference, solve_discrete, trajectory_to_csv
from .errors import ConfigError
from .positioning import localization_to_csv, localize, simulate_delays
from .probfile import build_problem
from .problems import AssembledModel

__all__ = ["MODES", "config_digest", "atomic_write_text", "run_experiment"]

MODES = ("solve", "rate", "noise-sweep", "order", "tdoa")


def config_digest(resolved: dict) -> str:
    blob = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_text(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _tolerance_key(tol: float) -> str:
    return f"{tol:.0e}"


def _rate_payload(report) -> dict:
    return {
        "rate": report.rate,
        "exponential": report.exponential,
        "r_squared": report.r_squared,
        "fit_residual": report.fit_residual,
        "time_to_tolerance": {
            _tolerance_key(tol): value
            for tol, value in report.time_to_tolerance.items()},
        "terminal_residual": report.terminal_residual,
    }


def _require(cfg: ExperimentConfig, mode: str, *sections) -> None:
    for name in sections:
        if getattr(cfg, name.replace("-", "_")) is None:
            raise ConfigError(f"{mode} runs need a {name} section")


def _steps(cfg: ExperimentConfig, eta: float, mode: str) -> int:
    if cfg.steps is not None:
        return cfg.steps
    if cfg.horizon is not None:
        return max(1, int(round(cfg.horizon / eta)))
    raise ConfigError(f"{mode} runs need horizon or steps")


def _discrete_model(cfg: ExperimentConfig, mode: str):
    _require(cfg, mode, "problem", "evolution", "scheme")
    problem = build_problem(cfg.problem)
    model = AssembledModel(problem, build_evolution(cfg.evolution),
                           noise=build_noise(cfg.noise, cfg.seed))
    scheme = build_scheme(cfg.scheme)
    return problem, model, scheme


def _run_solve(cfg: ExperimentConfig, out_dir: str) -> dict:
    problem, model, scheme = _discrete_model(cfg, "solve")
    n_steps = _steps(cfg, scheme.eta, "solve")
    traj = solve_discrete(model, build_x0(cfg.x0, problem), scheme, n_steps)
    report = {
        "kind": problem.kind,
        "scheme": scheme.kind,
        "eta": scheme.eta,
        "steps": n_steps,
        "terminal_residual": float(traj.residual_norms[-1]),
    }
    if problem.ground_truth is not None:
        truth = np.atleast_1d(problem.ground_truth(traj.times[-1])).ravel()
        report["terminal_state_error"] = float(
            np.linalg.norm(traj.states[-1] - truth))
    return {"trajectory.csv": trajectory_to_csv(traj),
            "report.json": _json_text(report)}


def _run_rate(cfg: ExperimentConfig, out_dir: str, tol: float = 1e-9) -> dict:
    _require(cfg, "rate", "problem", "evolution")
    if cfg.horizon is None:
        raise ConfigError("rate runs need horizon")
    problem = build_problem(cfg.problem)
    model = AssembledModel(problem, build_evolution(cfg.evolution),
                           noise=build_noise(cfg.noise, cfg.seed))
    traj = integrate_reference(model, build_x0(cfg.x0, problem),
                               cfg.horizon, tol=tol)
    report = fit_convergence_rate(traj)
    return {"trajectory.csv": trajectory_to_csv(traj),
            "rate.json": _json_text(_rate_payload(report))}


def _run_noise_sweep(cfg: ExperimentConfig, out_dir: str,
                     max_workers=None) -> dict:
    _require(cfg, "noise-sweep", "problem", "scheme", "sweep")
    sweep = cfg.sweep
    if not isinstance(sweep, dict):
        raise ConfigError("sweep must be a mapping")
    unknown = set(sweep) - {"noise_kind", "magnitudes", "formulas"}
    if unknown:
        raise ConfigError(
            f"unknown keys in sweep: {', '.join(sorted(unknown))}")
    for key in ("noise_kind", "magnitudes", "formulas"):
        if key not in sweep:
            raise ConfigError(f"sweep needs {key}")
    if not isinstance(sweep["formulas"], dict):
        raise ConfigError("sweep formulas must map names to evolution specs")
    problem = build_problem(cfg.problem)
    scheme = build_scheme(cfg.scheme)
    formulas = {name: build_evolution(doc)
                for name, doc in sweep["formulas"].items()}
    result = noise_sweep(
        problem, build_x0(cfg.x0, problem), formulas, sweep["noise_kind"],
        sweep["magnitudes"], scheme, _steps(cfg, scheme.eta, "noise-sweep"),
        seed=cfg.seed, max_workers=max_workers)
    return {"sweep.csv": result.csv(), "sweep.md": result.markdown()}


def _run_order(cfg: ExperimentConfig, out_dir: str) -> dict:
    _require(cfg, "order", "problem", "evolution", "order")
    order = cfg.order
    if not isinstance(order, dict):
        raise ConfigError("order must be a mapping")
    unknown = set(order) - {"halvings", "eta0", "horizon", "schemes"}
    if unknown:
        raise ConfigError(
            f"unknown keys in order: {', '.join(sorted(unknown))}")
    if "halvings" not in order:
        raise ConfigError("order needs halvings")
    problem = build_problem(cfg.problem)
    model = AssembledModel(problem, build_evolution(cfg.evolution),
                           noise=build_noise(cfg.noise, cfg.seed))
    kwargs = {}
    if "eta0" in order:
        kwargs["eta0"] = float(order["eta0"])
    if "horizon" in order:
        kwargs["horizon"] = float(order["horizon"])
    if "schemes" in order:
        kwargs["schemes"] = tuple(order["schemes"])
    report = order_report(model, int(order["halvings"]), **kwargs)
    return {"order.csv": report.csv(), "order.md": report.markdown()}


def _run_tdoa(cfg: ExperimentConfig, out_dir: str) -> dict:
    _require(cfg, "tdoa", "scenario", "evolution")
    scenario, delay_noise = build_scenario(cfg.scenario, cfg.seed)
    track = simulate_delays(scenario, delay_noise)
    scheme = build_scheme(cfg.scheme, default_eta=scenario.eta)
    result = localize(scenario, track, build_evolution(cfg.evolution), scheme)
    report = {
        "observers": int(scenario.observers.shape[0]),
        "eta": scheme.eta,
        "terminal_position_error": float(result.position_error[-1]),
    }
    return {"localization.csv": localization_to_csv(result),
            "report.json": _json_text(report)}


_RUNNERS = {
    "solve": _run_solve,
    "rate": _run_rate,
    "noise-sweep": _run_noise_sweep,
    "order": _run_order,
    "tdoa": _run_tdoa,
}


def run_experiment(cfg: ExperimentConfig, mode: str = "solve",
                   **kwargs) -> dict:
    """Run one experiment and write its artifacts plus manifest.json.

    Returns a map of artifact name to absolute path.
    """
    if mode not in _RUNNERS:
        raise ConfigError(f"unknown mode {mode!r}")
    out_dir = cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    artifacts = _RUNNERS[mode](cfg, out_dir, **kwargs)
    manifest = {
        "version": __version__,
        "mode": mode,
        "seed": cfg.seed,
        "config_digest": config_digest(cfg.resolved),
        "artifacts": {
            name: hashlib.sha256(text.encode("utf-8")).hexdigest()
            for name, text in artifacts.items()},
    }
    artifacts = dict(artifacts)
    artifacts["manifest.json"] = _json_text(manifest)
    written = {}
    for name, text in artifacts.items():
        path = os.path.join(out_dir, name)
        atomic_write_text(path, text)
        written[name] = os.path.abspath(path)
    return written
