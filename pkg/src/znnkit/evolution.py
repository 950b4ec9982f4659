"""Evolution formulas: prescribed error dynamics that drive e(t) to zero.

Each formula returns the target ``edot`` for the current error, plus the
derivative of an auxiliary integral state where the formula carries one.
The integral state is advanced alongside the main state by the chosen
integrator rather than by a separate quadrature, so the augmented system
stays a single ODE.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .activations import ActivationSpec, Linear, activate
from .errors import InvalidInput, InvalidSpec

__all__ = [
    "ScaleSchedule",
    "Constant",
    "PowerRamp",
    "scale_value",
    "EvolutionSpec",
    "Original",
    "VaryingParameter",
    "NoiseTolerant",
    "FiniteTime",
    "ActivatedNoiseTolerant",
    "evolution_rhs",
]


class ScaleSchedule:
    """Time profile of the convergence-rate parameter mu(t)."""


@dataclass(frozen=True)
class Constant(ScaleSchedule):
    gamma: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise InvalidSpec("constant scale must be positive")


@dataclass(frozen=True)
class PowerRamp(ScaleSchedule):
    """mu(t) = gamma * (t**p + 1): monotone ramp with a positive floor.

    A polynomial ramp grows fast enough to accelerate convergence without
    the overflow risk of an exponential one.
    """

    gamma: float = 1.0
    p: float = 2.0

    def __post_init__(self):
        if not self.gamma > 0 or not self.p > 0:
            raise InvalidSpec("ramp requires gamma > 0 and p > 0")


def scale_value(t: float, schedule: ScaleSchedule) -> float:
    """Evaluate the scale parameter mu(t) of a schedule."""
    if t < 0:
        raise InvalidInput(f"negative time t={t}")
    if isinstance(schedule, Constant):
        return schedule.gamma
    if isinstance(schedule, PowerRamp):
        return schedule.gamma * (t ** schedule.p + 1.0)
    raise InvalidSpec(f"unknown schedule {type(schedule).__name__}")


def _check_rate(name: str, value: float) -> None:
    if not value > 0:
        raise InvalidSpec(f"{name} must be positive, got {value}")


def _apply_activation(act, u: np.ndarray) -> np.ndarray:
    """Apply either an elementwise activation or a projection adapter."""
    if isinstance(act, ActivationSpec):
        return activate(u, act)
    return act.apply(u)


class EvolutionSpec:
    """Base class for evolution formulas."""

    uses_integral: bool = False


@dataclass(frozen=True)
class Original(EvolutionSpec):
    """edot = -gamma * Psi(e)."""

    gamma: float = 1.0
    activation: object = field(default_factory=Linear)

    def __post_init__(self):
        _check_rate("gamma", self.gamma)


@dataclass(frozen=True)
class VaryingParameter(EvolutionSpec):
    """edot = -mu(t) * Psi(e) with a time-varying scale parameter."""

    schedule: ScaleSchedule = field(default_factory=lambda: PowerRamp(1.0, 2.0))
    activation: object = field(default_factory=Linear)


@dataclass(frozen=True)
class NoiseTolerant(EvolutionSpec):
    """edot = -gamma*e - beta*integral(e): rejects constant disturbances."""

    gamma: float = 1.0
    beta: float = 1.0
    uses_integral = True

    def __post_init__(self):
        _check_rate("gamma", self.gamma)
        _check_rate("beta", self.beta)


@dataclass(frozen=True)
class FiniteTime(EvolutionSpec):
    """edot = -gamma * Psi(a1*e + a2*e^(b/c)), fractional power sign-magnitude.

    b and c must be odd positive integers with b >= c so the exponent keeps
    the rhs an odd function of e and real-valued for negative entries.
    """

    gamma: float = 1.0
    a1: float = 1.0
    a2: float = 1.0
    b: int = 3
    c: int = 1
    activation: object = field(default_factory=Linear)

    def __post_init__(self):
        _check_rate("gamma", self.gamma)
        _check_rate("a1", self.a1)
        _check_rate("a2", self.a2)
        for name in ("b", "c"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v <= 0 or v % 2 == 0:
                raise InvalidSpec(f"{name} must be a positive odd integer, got {v!r}")
        if self.b < self.c:
            raise InvalidSpec(f"exponent must satisfy b >= c, got b={self.b}, c={self.c}")


@dataclass(frozen=True)
class ActivatedNoiseTolerant(EvolutionSpec):
    """edot = -gamma*Psi1(e) - beta*Psi2(e + gamma*integral(Psi1(e)))."""

    gamma: float = 1.0
    beta: float = 1.0
    psi1: object = field(default_factory=Linear)
    psi2: object = field(default_factory=Linear)
    uses_integral = True

    def __post_init__(self):
        _check_rate("gamma", self.gamma)
        _check_rate("beta", self.beta)


def _check_aux(e: np.ndarray, aux: np.ndarray, needed: bool) -> None:
    if needed and aux.shape != e.shape:
        raise InvalidInput(
            f"auxiliary state shape {aux.shape} does not match error shape {e.shape}")
    if not needed and aux.size != 0:
        raise InvalidInput("formula carries no integral state but aux is non-empty")


def evolution_rhs(e, aux, t: float, spec: EvolutionSpec):
    """Return (edot_target, auxdot) for the given formula at time t.

    ``aux`` carries the running integral of e (noise-tolerant formula) or of
    Psi1(e) (activated noise-tolerant), and must be empty for the rest.
    """
    e = np.atleast_1d(np.asarray(e, dtype=float))
    aux = np.atleast_1d(np.asarray(aux, dtype=float)) if np.size(aux) else np.empty(0)
    empty = np.empty(0)

    if isinstance(spec, Original):
        _check_aux(e, aux, False)
        return -spec.gamma * _apply_activation(spec.activation, e), empty
    if isinstance(spec, VaryingParameter):
        _check_aux(e, aux, False)
        mu = scale_value(t, spec.schedule)
        return -mu * _apply_activation(spec.activation, e), empty
    if isinstance(spec, NoiseTolerant):
        _check_aux(e, aux, True)
        return -spec.gamma * e - spec.beta * aux, e.copy()
    if isinstance(spec, FiniteTime):
        _check_aux(e, aux, False)
        frac = np.sign(e) * np.abs(e) ** (spec.b / spec.c)
        inner = spec.a1 * e + spec.a2 * frac
        return -spec.gamma * _apply_activation(spec.activation, inner), empty
    if isinstance(spec, ActivatedNoiseTolerant):
        _check_aux(e, aux, True)
        p1 = _apply_activation(spec.psi1, e)
        p2 = _apply_activation(spec.psi2, e + spec.gamma * aux)
        return -spec.gamma * p1 - spec.beta * p2, p1
    raise InvalidSpec(f"unknown evolution formula {type(spec).__name__}")
