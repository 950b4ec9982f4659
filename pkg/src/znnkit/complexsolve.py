"""Complex linear systems A(t) x(t) = b(t) under the two complex activations.

The real/imaginary method runs the equivalent 2n-dimensional real embedding

    [[Re A, -Im A], [Im A, Re A]] [Re x; Im x] = [Re b; Im b]

through the ordinary real pipeline, which applies the activation to the
stacked real and imaginary residual parts. The modulus/argument method
stays in complex arithmetic and activates the elementwise polar form. With
a linear activation the two are algebraically identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .activations import ActivationSpec, ComplexActivationMethod, activate_complex
from .errors import InvalidInput
from .evolution import Original
from .operators import TimeVaryingOperator
from .problems import AssembledModel, ProblemInstance
from .discretize import Scheme, solve_discrete

__all__ = ["ComplexTrajectory", "embed_complex_matrix", "embed_complex_vector",
           "solve_complex_linear"]


def embed_complex_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    return np.block([[A.real, -A.imag], [A.imag, A.real]])


def embed_complex_vector(b) -> np.ndarray:
    b = np.asarray(b, dtype=complex)
    return np.concatenate([b.real, b.imag])


@dataclass(frozen=True)
class ComplexTrajectory:
    times: np.ndarray
    states: np.ndarray  # complex, one row per time
    residual_norms: np.ndarray


def solve_complex_linear(Aop, bop, x0, gamma: float, activation: ActivationSpec,
                         method: ComplexActivationMethod, eta: float,
                         n_steps: int) -> ComplexTrajectory:
    """Euler-forward run of the complex system under the chosen method.

    ``Aop``/``bop`` are callables of t returning complex arrays. Both
    methods use the same backward-difference data derivatives, so their
    trajectories are directly comparable step by step.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=complex))
    n = x0.size
    A0 = np.asarray(Aop(0.0), dtype=complex)
    if A0.shape != (n, n):
        raise InvalidInput(f"A shape {A0.shape} does not match state size {n}")

    if method is ComplexActivationMethod.REAL_IMAG:
        ops = {
            "A": TimeVaryingOperator(lambda t: embed_complex_matrix(Aop(t))),
            "b": TimeVaryingOperator(lambda t: embed_complex_vector(bop(t))),
        }
        problem = ProblemInstance("linear_system", ops, state_dim=2 * n)
        model = AssembledModel(problem, Original(gamma=gamma, activation=activation))
        traj = solve_discrete(model, embed_complex_vector(x0),
                              Scheme("euler_forward", eta), n_steps)
        states = traj.states[:, :n] + 1j * traj.states[:, n:]
        return ComplexTrajectory(times=traj.times, states=states,
                                 residual_norms=traj.residual_norms)

    if method is not ComplexActivationMethod.MODULUS_ARGUMENT:
        raise InvalidInput(f"unknown complex activation method {method!r}")

    x = x0.copy()
    times = [0.0]
    states = [x.copy()]
    residuals = [np.linalg.norm(np.asarray(Aop(0.0)) @ x - np.asarray(bop(0.0)))]
    A_prev = None
    b_prev = None
    for k in range(n_steps):
        t = k * eta
        A = np.asarray(Aop(t), dtype=complex)
        b = np.asarray(bop(t), dtype=complex)
        if k == 0:
            dA = np.zeros_like(A)
            db = np.zeros_like(b)
        else:
            dA = (A - A_prev) / eta
            db = (b - b_prev) / eta
        e = A @ x - b
        target = -gamma * activate_complex(e, activation, method)
        xdot = np.linalg.solve(A, target - (dA @ x - db))
        x = x + eta * xdot
        A_prev, b_prev = A, b
        t_next = (k + 1) * eta
        times.append(t_next)
        states.append(x.copy())
        An = np.asarray(Aop(t_next), dtype=complex)
        bn = np.asarray(bop(t_next), dtype=complex)
        residuals.append(np.linalg.norm(An @ x - bn))
    return ComplexTrajectory(times=np.asarray(times), states=np.asarray(states),
                             residual_norms=np.asarray(residuals))
