"""Odd monotone activation functions for zeroing neural dynamics.

Every activation maps 0 to 0, is odd (``psi(-u) == -psi(u)``) and monotone
non-decreasing. Oddness holds bitwise because every kind is evaluated as
``sign(u) * profile(|u|)`` with a profile defined on nonnegative magnitudes.
The same profile is what the modulus/argument complex extension applies to
elementwise moduli, so it must (and does) map nonnegatives to nonnegatives.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, InvalidSpec

__all__ = [
    "ActivationSpec",
    "Linear",
    "PowerSigmoid",
    "SignBiPower",
    "Bounded",
    "ComplexActivationMethod",
    "activate",
    "activate_complex",
]


class ActivationSpec:
    """Base class for elementwise odd monotone activations."""

    def profile(self, a: np.ndarray) -> np.ndarray:
        """Activation restricted to nonnegative magnitudes ``a >= 0``."""
        raise NotImplementedError

    def apply(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return np.sign(u) * self.profile(np.abs(u))


@dataclass(frozen=True)
class Linear(ActivationSpec):
    """Identity activation; keeps the plain exponential-decay dynamics."""

    def profile(self, a):
        return a

    def apply(self, u):
        return np.asarray(u, dtype=float)


@dataclass(frozen=True)
class PowerSigmoid(ActivationSpec):
    """Hybrid power/sigmoid activation.

    psi(u) = u^p                      for |u| >= 1
           = tanh(xi*u/2)/tanh(xi/2)  for |u| <  1

    The sigmoid branch equals ((1+e^-xi)/(1-e^-xi)) * (1-e^-xi*u)/(1+e^-xi*u)
    and both branches meet at |u| = 1, so the function is continuous. ``p``
    must be an odd integer >= 3 so the power branch stays odd.
    """

    p: int = 3
    xi: float = 4.0

    def __post_init__(self):
        if self.p < 3 or self.p % 2 == 0:
            raise InvalidSpec(f"power-sigmoid exponent must be an odd integer >= 3, got {self.p}")
        if self.xi <= 0:
            raise InvalidSpec(f"power-sigmoid steepness must be positive, got {self.xi}")

    def profile(self, a):
        a = np.asarray(a, dtype=float)
        inner = np.tanh(0.5 * self.xi * np.minimum(a, 1.0)) / np.tanh(0.5 * self.xi)
        return np.where(a < 1.0, inner, a**self.p)


@dataclass(frozen=True)
class SignBiPower(ActivationSpec):
    """Two-term fractional-power activation enabling finite-time convergence.

    psi(u) = (|u|^r + |u|^(1/r)) * sign(u) / 2  with  r in (0, 1).

    The low-power term dominates near zero (finite-time approach), the
    high-power term dominates for large errors (fast initial contraction).
    """

    r: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.r < 1.0:
            raise InvalidSpec(f"sign-bi-power exponent must lie in (0, 1), got {self.r}")

    def profile(self, a):
        a = np.asarray(a, dtype=float)
        return 0.5 * (a**self.r + a ** (1.0 / self.r))


@dataclass(frozen=True)
class Bounded(ActivationSpec):
    """Linear activation saturated at ``+-limit``."""

    limit: float = 1.0

    def __post_init__(self):
        if self.limit <= 0:
            raise InvalidSpec(f"saturation limit must be positive, got {self.limit}")

    def profile(self, a):
        return np.minimum(np.asarray(a, dtype=float), self.limit)


class ComplexActivationMethod(enum.Enum):
    """How a real activation extends to complex arrays."""

    REAL_IMAG = "real_imag"
    MODULUS_ARGUMENT = "modulus_argument"


def activate(u, spec: ActivationSpec) -> np.ndarray:
    """Apply an activation elementwise to a real array.

    Raises InvalidInput on non-finite entries.
    """
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise InvalidInput("activation input contains non-finite entries")
    return spec.apply(u)


def activate_complex(z, spec: ActivationSpec, method: ComplexActivationMethod) -> np.ndarray:
    """Apply a real activation to a complex array.

    REAL_IMAG activates real and imaginary parts independently:
    ``psi(G) + i*psi(H)``. MODULUS_ARGUMENT activates the elementwise
    modulus and keeps the argument (taken in (0, 2*pi]):
    ``psi(|z|) * exp(i*arg(z))``.
    """
    z = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(z)):
        raise InvalidInput("activation input contains non-finite entries")
    if method is ComplexActivationMethod.REAL_IMAG:
        return spec.apply(z.real) + 1j * spec.apply(z.imag)
    mod = np.abs(z)
    arg = np.angle(z)
    arg = np.where(arg <= 0.0, arg + 2.0 * np.pi, arg)
    return spec.profile(mod) * np.exp(1j * arg)
