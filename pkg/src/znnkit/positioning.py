"""TDOA source localization as a time-varying linear system.

Delay differences relative to a reference observer give, after squaring the
range relations, a linear system in the unknown [x, y, z, r1] where r1 is
the distance to the reference observer. Coordinates are taken relative to
observer 1 (the reference), which makes the squared relations close exactly:
with s_i the centered position of observer i and h_i = v * d_i,

    s_i . p + h_i * r1 = (||s_i||^2 - h_i^2) / 2,      i = 2..m.

Each localization run wraps that system as a ``linear_system`` problem and
drives it with a chosen evolution formula and stepper.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .discretize import Scheme, Trajectory, solve_discrete
from .errors import DegenerateGeometry, InsufficientObservers, InvalidInput
from .evolution import EvolutionSpec
from .noise import NoiseSpec, sample_noise
from .operators import TimeVaryingOperator
from .problems import AssembledModel, ProblemInstance, perturb_model

__all__ = [
    "Scenario",
    "DelayTrack",
    "simulate_delays",
    "build_tdoa_system",
    "localize",
    "LocalizationResult",
    "localization_to_csv",
]

DEFAULT_SPEED = 343.0  # acoustic propagation, m/s

_MIN_OBSERVERS = 5


@dataclass(frozen=True)
class Scenario:
    """Observer geometry plus the (true) target path."""

    observers: np.ndarray  # (m, 3) positions in meters
    target_path: Callable[[float], np.ndarray]
    horizon: float
    eta: float
    v: float = DEFAULT_SPEED

    def __post_init__(self):
        obs = np.atleast_2d(np.asarray(self.observers, dtype=float))
        if obs.ndim != 2 or obs.shape[1] != 3:
            raise InvalidInput(f"observers must be (m, 3), got {obs.shape}")
        if obs.shape[0] < _MIN_OBSERVERS:
            raise InsufficientObservers(
                f"need at least {_MIN_OBSERVERS} observers, got {obs.shape[0]}")
        if self.v <= 0 or self.horizon < 0 or self.eta <= 0:
            raise InvalidInput("v and eta must be positive, horizon nonnegative")
        object.__setattr__(self, "observers", obs)


@dataclass(frozen=True)
class DelayTrack:
    """Per-observer delays relative to observer 1, with optional noise.

    ``delays(t, step_index)`` returns the m-1 delays d_i(t) in seconds;
    ``r1(t)`` is the clean target distance to observer 1, kept for error
    reporting and oracle checks.
    """

    clean_delays: Callable[[float], np.ndarray]
    r1: Callable[[float], float]
    noise: Optional[NoiseSpec] = None

    def delays(self, t: float, step_index=None) -> np.ndarray:
        d = np.asarray(self.clean_delays(t), dtype=float)
        if self.noise is not None:
            d = d + sample_noise(self.noise, t, step_index)
        return d


def simulate_delays(s: Scenario, noise: Optional[NoiseSpec] = None) -> DelayTrack:
    """Exact geometric delays d_i = (r_i - r_1)/v, plus optional delay noise."""
    obs = s.observers

    def ranges(t):
        return np.linalg.norm(obs - s.target_path(t), axis=1)

    def clean(t):
        r = ranges(t)
        return (r[1:] - r[0]) / s.v

    return DelayTrack(clean_delays=clean, r1=lambda t: float(ranges(t)[0]),
                      noise=noise)


def build_tdoa_system(s: Scenario, track: DelayTrack, t: float,
                      step_index=None):
    """System matrix and right-hand side at time t, observer-1 frame.

    Row i-1 is [a_i, b_i, c_i, v*d_i(t)] with (a_i, b_i, c_i) the centered
    observer coordinates; the right-hand side entry is v*d_i(t) - g_i(t)
    where g_i = h_i + (h_i^2 - ||s_i||^2)/2, so exact delays make the true
    [x, y, z, r1] an exact solution.
    """
    obs = s.observers
    if obs.shape[0] < _MIN_OBSERVERS:
        raise InsufficientObservers(
            f"need at least {_MIN_OBSERVERS} observers, got {obs.shape[0]}")
    centered = obs[1:] - obs[0]
    h = s.v * track.delays(t, step_index)
    M = np.column_stack([centered, h])
    g = h + (h ** 2 - np.sum(centered ** 2, axis=1)) / 2.0
    rhs = s.v * track.delays(t, step_index) - g
    if np.linalg.matrix_rank(M) < 4:
        raise DegenerateGeometry(f"TDOA system rank-deficient at t={t:.6g}")
    return M, rhs


@dataclass(frozen=True)
class LocalizationResult:
    """Solver trajectory plus per-sample position estimates and errors."""

    trajectory: Trajectory
    estimates: np.ndarray       # (N, 3) world-frame position estimates
    position_error: np.ndarray  # (N,) Euclidean error vs the true path


def localize(s: Scenario, track: DelayTrack, evolution: EvolutionSpec,
             scheme: Scheme,
             evolution_noise: Optional[NoiseSpec] = None) -> LocalizationResult:
    """Run the ZNN solver on the TDOA system over the scenario horizon.

    The warm start is the observer centroid; the unknown r1 starts from the
    centroid's distance to observer 1. A zero horizon returns the initial
    guess and its error. ``evolution_noise`` optionally disturbs the
    prescribed error dynamics (edot = F(e) + n), the injection point where
    integral-feedback formulas can actually reject a bias; disturbances
    baked into the track data shift the system's solution instead, which no
    formula can undo.
    """
    obs = s.observers
    ref = obs[0]

    # The delay track is deterministic in t, so the assembled system can be
    # memoized; steppers sample the same instants repeatedly.
    @lru_cache(maxsize=8)
    def system(t):
        return build_tdoa_system(s, track, t)

    def mat(t):
        return system(float(t))[0]

    def rhs(t):
        return system(float(t))[1]

    ops = {"A": TimeVaryingOperator(mat), "b": TimeVaryingOperator(rhs)}
    problem = ProblemInstance("linear_system", ops, state_dim=4)
    model = AssembledModel(problem, evolution)
    if evolution_noise is not None:
        model = perturb_model(model, evolution_noise)

    centroid = obs.mean(axis=0)
    x0 = np.concatenate([centroid - ref, [np.linalg.norm(centroid - ref)]])

    n_steps = int(round(s.horizon / scheme.eta))
    if n_steps < 1:
        traj = Trajectory(
            times=np.zeros(1), states=x0[None, :],
            aux=np.zeros((1, model.aux_dim)),
            residual_norms=np.array([np.linalg.norm(mat(0.0) @ x0 - rhs(0.0))]))
    else:
        traj = solve_discrete(model, x0, scheme, n_steps)

    estimates = traj.states[:, :3] + ref
    truth = np.array([s.target_path(t) for t in traj.times])
    position_error = np.linalg.norm(estimates - truth, axis=1)
    return LocalizationResult(trajectory=traj, estimates=estimates,
                              position_error=position_error)


def localization_to_csv(result: LocalizationResult) -> str:
    """Serialize with header t,pos_error,x,y,z,r1 (world-frame position)."""
    traj = result.trajectory
    out = ["t,pos_error,x,y,z,r1"]
    for i, t in enumerate(traj.times):
        x, y, z = result.estimates[i]
        r1 = traj.states[i, 3]
        vals = (t, result.position_error[i], x, y, z, r1)
        out.append(",".join(f"{v:.17g}" for v in vals))
    return "\n".join(out) + "\n"
