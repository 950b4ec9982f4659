"""Additive disturbance models injected into the evolution dynamics.

Noise enters the prescribed error derivative (edot = F(e) + n), not the
problem data. Random noise is keyed by (seed, step index) and held constant
within a step, which keeps discrete runs reproducible; it therefore cannot
be used with continuous-time integration, where no step index exists.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidInput, InvalidSpec

__all__ = ["NoiseSpec", "Constant", "Linear", "BoundedRandom", "sample_noise"]


class NoiseSpec:
    """Base class for disturbance models."""


@dataclass(frozen=True)
class Constant(NoiseSpec):
    c: float | tuple = 0.0

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(np.atleast_1d(np.asarray(self.c, float))))


@dataclass(frozen=True)
class Linear(NoiseSpec):
    slope: float | tuple = 0.0

    def __post_init__(self):
        object.__setattr__(
            self, "slope", tuple(np.atleast_1d(np.asarray(self.slope, float))))


@dataclass(frozen=True)
class BoundedRandom(NoiseSpec):
    bound: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not self.bound > 0:
            raise InvalidSpec("bound must be positive")


@lru_cache(maxsize=1024)
def _bounded_draw(seed: int, step_index: int, bound: float) -> np.ndarray:
    # Steppers sample the same (seed, step) pair more than once per step;
    # caching skips the repeated generator construction.
    rng = np.random.default_rng([seed, step_index])
    return rng.uniform(-bound, bound, size=1)


def sample_noise(spec: NoiseSpec, t: float, step_index=None) -> np.ndarray:
    """Noise sample at time t (and step index for the random kind).

    BoundedRandom draws a uniform value in [-bound, bound] deterministic in
    (seed, step_index); the same pair always yields the same sample.
    """
    if t < 0:
        raise InvalidInput(f"negative time t={t}")
    if isinstance(spec, Constant):
        return np.asarray(spec.c, dtype=float)
    if isinstance(spec, Linear):
        return np.asarray(spec.slope, dtype=float) * t
    if isinstance(spec, BoundedRandom):
        if step_index is None:
            raise InvalidInput(
                "bounded random noise needs a step index; it is only defined "
                "for discrete runs")
        return _bounded_draw(spec.seed, int(step_index), spec.bound).copy()
    raise InvalidSpec(f"unknown noise kind {type(spec).__name__}")
