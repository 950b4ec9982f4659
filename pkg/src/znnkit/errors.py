"""Exception hierarchy shared by all znnkit modules."""


class ZnnError(Exception):
    """Base class for every error raised by znnkit."""


class InvalidInput(ZnnError):
    """An argument violates a precondition (non-finite, wrong shape, ...)."""


class InvalidSpec(ZnnError):
    """A specification object was constructed with inconsistent parameters."""


class InvalidSet(ZnnError):
    """A projection set is empty or does not contain the origin."""


class SingularJacobian(ZnnError):
    """The model Jacobian is numerically singular at some time."""

    def __init__(self, t: float, cond: float, step=None):
        msg = f"Jacobian numerically singular at t={t:.6g} (cond estimate {cond:.3e})"
        if step is not None:
            msg += f" at step {step}"
        super().__init__(msg)
        self.t = t
        self.cond = cond
        self.step = step


class NeedsWarmup(ZnnError):
    """A multi-step scheme was invoked with insufficient history."""


class StiffnessFailure(ZnnError):
    """The adaptive reference integrator underflowed its step size."""


class InsufficientObservers(ZnnError):
    """A localization scenario has too few observers."""


class DegenerateGeometry(ZnnError):
    """The localization system matrix is rank deficient."""


class ConfigError(ZnnError):
    """A configuration or definition file is malformed."""


class NothingToFit(ZnnError):
    """A trajectory carries no usable residuals for rate fitting."""


class PredictMannerViolation(ZnnError):
    """A stepper requested problem data from the future in strict mode."""
