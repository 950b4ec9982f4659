"""Time-varying problem data: matrix/vector-valued functions of t.

An operator bundles a value map ``t -> ndarray`` with an optional analytic
derivative map. When the derivative is missing, continuous-time evaluation
falls back to a central finite difference, while discrete steppers use a
backward difference over one sample gap so no future data is touched.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InvalidInput

__all__ = [
    "TimeVaryingOperator",
    "constant_operator",
    "operator_derivative",
    "backward_derivative",
    "linearized_operator",
    "instrument_operator",
]

_FD_SPACING = 1e-6


@dataclass(frozen=True)
class TimeVaryingOperator:
    """value: t -> ndarray; derivative: optional analytic t -> ndarray."""

    value: Callable[[float], np.ndarray]
    derivative: Optional[Callable[[float], np.ndarray]] = None

    def __call__(self, t: float) -> np.ndarray:
        out = np.asarray(self.value(t), dtype=float)
        if not np.all(np.isfinite(out)):
            raise InvalidInput(f"operator sample at t={t} is not finite")
        return out


def constant_operator(arr) -> TimeVaryingOperator:
    """Wrap a fixed array as a time-invariant operator with zero derivative."""
    arr = np.asarray(arr, dtype=float)
    zero = np.zeros_like(arr)
    return TimeVaryingOperator(value=lambda t: arr, derivative=lambda t: zero)


def operator_derivative(op: TimeVaryingOperator, t: float, h: float = _FD_SPACING):
    """Analytic derivative when declared, else a central finite difference."""
    if op.derivative is not None:
        return np.asarray(op.derivative(t), dtype=float)
    return (op(t + h) - op(t - h)) / (2.0 * h)


def backward_derivative(op: TimeVaryingOperator, t: float, eta: float, k: int):
    """Derivative estimate usable in real time at step k.

    Analytic derivatives are functions of t only, so they are allowed;
    otherwise a one-gap backward difference is used, and the very first step
    (no past sample) gets a zero estimate.
    """
    if op.derivative is not None:
        return np.asarray(op.derivative(t), dtype=float)
    if k == 0:
        return np.zeros_like(op(t))
    return (op(t) - op(t - eta)) / eta


def linearized_operator(op: TimeVaryingOperator, t0: float, slope: np.ndarray):
    """Freeze an operator at its sample at t0 plus a linear extrapolation.

    Used by the strict predict-manner RK4 mode: stage times past t0 are
    served from data already in hand.
    """
    base = op(t0)
    slope = np.asarray(slope, dtype=float)
    return TimeVaryingOperator(
        value=lambda t: base + (t - t0) * slope,
        derivative=lambda t: slope,
    )


def instrument_operator(op: TimeVaryingOperator):
    """Return (wrapped operator, log) where log records every sample time.

    Both value and derivative requests are logged; the audit that discrete
    steppers never peek past the current step time is built on this.
    """
    log: list[float] = []

    def value(t):
        log.append(float(t))
        return op.value(t)

    deriv = None
    if op.derivative is not None:
        def deriv(t):
            log.append(float(t))
            return op.derivative(t)

    return TimeVaryingOperator(value=value, derivative=deriv), log
