"""Discrete-time steppers and the adaptive continuous reference integrator.

All discrete schemes honor the real-time "predict" constraint: the update
for x_{k+1} uses problem data sampled no later than t_k. The one exception
is RK4 in its default textbook mode, which samples stage times inside
(t_k, t_k + eta]; its strict mode replaces those samples with a backward
linear extrapolation so the constraint holds there too.

Scheme kinds:

- ``euler_forward``    x_{k+1} = x_k + eta * xdot(t_k, x_k)
- ``euler_backward``   delayed-explicit backward rule:
                       x_{k+1} = x_k + eta * xdot(t_k, x_{k-1})
- ``three_step`` /     x_{k+1} = (3 x_k - 2 x_{k-1} + x_{k-2}) / 2
  ``taylor_ztd``                + eta * xdot(t_k, x_k)
- ``rk4``              classical four-stage update of the augmented ODE

``three_step`` and ``taylor_ztd`` share one second-order update rule; both
names are accepted. The auxiliary integral state is advanced by the same
rule as the main state.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (InvalidInput, InvalidSpec, NeedsWarmup, SingularJacobian,
                     StiffnessFailure)
from .noise import sample_noise
from .operators import (TimeVaryingOperator, backward_derivative,
                        linearized_operator)
from .problems import AssembledModel, eval_error, model_rhs

__all__ = [
    "SCHEME_KINDS",
    "Scheme",
    "Trajectory",
    "trajectory_to_csv",
    "step",
    "solve_discrete",
    "integrate_reference",
    "empirical_order",
    "instrument_problem",
]

SCHEME_KINDS = ("euler_forward", "euler_backward", "three_step", "taylor_ztd",
                "rk4")

# (state, aux) pairs needed, counting the current one.
_HISTORY_NEEDED = {"euler_forward": 1, "euler_backward": 2, "three_step": 3,
                   "taylor_ztd": 3, "rk4": 1}

_REFERENCE_SAMPLES = 200


@dataclass(frozen=True)
class Scheme:
    """A discretization rule with sample gap eta.

    ``strict`` selects the predict-manner RK4 mode (no effect on the other
    kinds, which are strict by construction).
    """

    kind: str
    eta: float
    strict: bool = False

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise InvalidSpec(f"unknown scheme kind {self.kind!r}")
        if not self.eta > 0:
            raise InvalidSpec(f"sample gap must be positive, got {self.eta}")


@dataclass(frozen=True)
class Trajectory:
    """Time series of states, residual norms, aux state and noise samples."""

    times: np.ndarray
    states: np.ndarray
    aux: np.ndarray
    residual_norms: np.ndarray
    noise_log: Optional[np.ndarray] = None

    def __post_init__(self):
        n = len(self.times)
        if not (len(self.states) == len(self.aux) == len(self.residual_norms) == n):
            raise InvalidInput("trajectory sequences must have equal length")
        if self.noise_log is not None and len(self.noise_log) != n:
            raise InvalidInput("noise log length mismatch")
        if n > 1 and not np.all(np.diff(self.times) > 0):
            raise InvalidInput("times must be strictly increasing")


def trajectory_to_csv(traj: Trajectory) -> str:
    """Serialize with header t,residual_norm,x_0..[,aux_0..][,noise_0..]."""
    ncols = traj.states.shape[1]
    header = ["t", "residual_norm"] + [f"x_{i}" for i in range(ncols)]
    blocks = [traj.times[:, None], traj.residual_norms[:, None], traj.states]
    if traj.aux.shape[1] > 0:
        header += [f"aux_{i}" for i in range(traj.aux.shape[1])]
        blocks.append(traj.aux)
    if traj.noise_log is not None:
        header += [f"noise_{i}" for i in range(traj.noise_log.shape[1])]
        blocks.append(traj.noise_log)
    data = np.hstack(blocks)
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    for row in data:
        out.write(",".join(f"{v:.17g}" for v in row) + "\n")
    return out.getvalue()


def _discrete_dsamples(problem, t, eta, k):
    return {name: backward_derivative(op, t, eta, k)
            for name, op in problem.operators.items()}


def _extrapolated_model(m: AssembledModel, t: float, eta: float, k: int):
    """Freeze problem data at t plus a backward-difference linear trend."""
    new_ops = {name: linearized_operator(op, t, backward_derivative(op, t, eta, k))
               for name, op in m.problem.operators.items()}
    return AssembledModel(replace(m.problem, operators=new_ops),
                          m.evolution, m.noise)


def _rk4_update(m, x, aux, t, eta, k):
    def f(ti, xi, ai):
        return model_rhs(m, xi, ai, ti, step_index=k)

    k1x, k1a = f(t, x, aux)
    k2x, k2a = f(t + eta / 2, x + eta / 2 * k1x, aux + eta / 2 * k1a)
    k3x, k3a = f(t + eta / 2, x + eta / 2 * k2x, aux + eta / 2 * k2a)
    k4x, k4a = f(t + eta, x + eta * k3x, aux + eta * k3a)
    xn = x + eta / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
    an = aux + eta / 6 * (k1a + 2 * k2a + 2 * k3a + k4a)
    return xn, an


def step(m: AssembledModel, scheme: Scheme, history, k: int):
    """Advance one step from t_k = k*eta to t_{k+1}.

    ``history`` lists the last (state, aux) pairs newest first: history[0]
    at t_k, history[1] at t_{k-1}, history[2] at t_{k-2}. Raises NeedsWarmup
    when the scheme needs more history than supplied.
    """
    eta = scheme.eta
    t = k * eta
    needed = _HISTORY_NEEDED[scheme.kind]
    if len(history) < needed:
        raise NeedsWarmup(
            f"{scheme.kind} needs {needed} states, history has {len(history)}")
    x, aux = history[0]

    if scheme.kind == "euler_forward":
        dsamples = _discrete_dsamples(m.problem, t, eta, k)
        xd, ad = model_rhs(m, x, aux, t, dsamples=dsamples, step_index=k)
        return x + eta * xd, aux + eta * ad

    if scheme.kind == "euler_backward":
        x_prev, aux_prev = history[1]
        dsamples = _discrete_dsamples(m.problem, t, eta, k)
        xd, ad = model_rhs(m, x_prev, aux_prev, t, dsamples=dsamples,
                           step_index=k)
        return x + eta * xd, aux + eta * ad

    if scheme.kind in ("three_step", "taylor_ztd"):
        x1, a1 = history[0]
        x2, a2 = history[1]
        x3, a3 = history[2]
        dsamples = _discrete_dsamples(m.problem, t, eta, k)
        xd, ad = model_rhs(m, x1, a1, t, dsamples=dsamples, step_index=k)
        xn = (3 * x1 - 2 * x2 + x3) / 2 + eta * xd
        an = (3 * a1 - 2 * a2 + a3) / 2 + eta * ad
        return xn, an

    if scheme.kind == "rk4":
        target = _extrapolated_model(m, t, eta, k) if scheme.strict else m
        return _rk4_update(target, x, aux, t, eta, k)

    raise InvalidSpec(f"unknown scheme kind {scheme.kind!r}")


def _noise_row(m, t, k):
    sample = np.atleast_1d(sample_noise(m.noise, t, step_index=k))
    if sample.size == 1:
        return np.full(m.problem.error_dim, sample[0])
    return np.asarray(sample, dtype=float)


def solve_discrete(m: AssembledModel, x0, scheme: Scheme,
                   n_steps: int) -> Trajectory:
    """Iterate the scheme from t=0, with Euler-forward warmup steps.

    Residual norms are recorded at every arrival time; the auxiliary state
    starts at zero.
    """
    if n_steps < 1:
        raise InvalidInput(f"n_steps must be >= 1, got {n_steps}")
    x = np.atleast_1d(np.asarray(x0, dtype=float))
    aux = np.zeros(m.aux_dim)
    history = [(x, aux)]
    eta = scheme.eta
    fallback = replace(scheme, kind="euler_forward")

    times = [0.0]
    states = [x]
    auxs = [aux]
    residuals = [np.linalg.norm(eval_error(m.problem, x, 0.0))]
    noise_rows = [_noise_row(m, 0.0, 0)] if m.noise is not None else None

    for k in range(n_steps):
        try:
            try:
                xn, an = step(m, scheme, history, k)
            except NeedsWarmup:
                xn, an = step(m, fallback, history, k)
        except SingularJacobian as exc:
            raise SingularJacobian(exc.t, exc.cond, step=k) from exc
        t_next = (k + 1) * eta
        history.insert(0, (xn, an))
        del history[3:]
        times.append(t_next)
        states.append(xn)
        auxs.append(an)
        residuals.append(np.linalg.norm(eval_error(m.problem, xn, t_next)))
        if noise_rows is not None:
            noise_rows.append(_noise_row(m, t_next, k + 1))

    return Trajectory(
        times=np.asarray(times),
        states=np.asarray(states),
        aux=np.asarray(auxs).reshape(len(times), m.aux_dim),
        residual_norms=np.asarray(residuals),
        noise_log=None if noise_rows is None else np.asarray(noise_rows),
    )


def integrate_reference(m: AssembledModel, x0, horizon: float,
                        tol: float = 1e-9) -> Trajectory:
    """Adaptive embedded RK 4(5) run, densely sampled at 200 uniform times.

    This is the convergence oracle for the discrete schemes; it has no
    predict-manner restriction.
    """
    if not 1e-12 <= tol <= 1e-2:
        raise InvalidInput(f"tol {tol} outside [1e-12, 1e-2]")
    if horizon < 0:
        raise InvalidInput(f"negative horizon {horizon}")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    n = x0.size
    aux0 = np.zeros(m.aux_dim)

    if horizon == 0:
        return Trajectory(
            times=np.zeros(1), states=x0[None, :], aux=aux0[None, :],
            residual_norms=np.array(
                [np.linalg.norm(eval_error(m.problem, x0, 0.0))]))

    def rhs(t, z):
        xd, ad = model_rhs(m, z[:n], z[n:], t)
        return np.concatenate([xd, ad])

    sol = solve_ivp(rhs, (0.0, horizon), np.concatenate([x0, aux0]),
                    method="RK45", rtol=tol, atol=tol * 1e-2,
                    dense_output=True)
    if not sol.success:
        raise StiffnessFailure(f"reference integrator failed: {sol.message}")
    times = np.linspace(0.0, horizon, _REFERENCE_SAMPLES)
    z = sol.sol(times).T
    states = z[:, :n]
    aux = z[:, n:]
    residuals = np.array([
        np.linalg.norm(eval_error(m.problem, states[i], times[i]))
        for i in range(len(times))])
    return Trajectory(times=times, states=states, aux=aux,
                      residual_norms=residuals)


def empirical_order(m: AssembledModel, scheme_kind: str, eta_list,
                    horizon: float = 3.0):
    """Steady-state residual per sample gap, for order-of-accuracy sweeps.

    The gaps must each halve the previous one; the steady residual is the
    maximum over the final 10% of steps, which excludes the transient.
    Starts from the ground truth when available, else from zeros.
    """
    eta_list = [float(e) for e in eta_list]
    if len(eta_list) < 3:
        raise InvalidInput("need at least 3 sample gaps")
    for a, b in zip(eta_list, eta_list[1:]):
        if abs(a / b - 2.0) > 1e-9:
            raise InvalidInput(f"gaps must halve: {a} -> {b}")
    p = m.problem
    x0 = p.ground_truth(0.0) if p.ground_truth is not None else np.zeros(p.state_dim)
    out = []
    for eta in eta_list:
        n_steps = int(round(horizon / eta))
        traj = solve_discrete(m, x0, Scheme(scheme_kind, eta), n_steps)
        tail = traj.residual_norms[-max(1, n_steps // 10):]
        out.append((eta, float(tail.max())))
    return out


def instrument_problem(problem):
    """Wrap every operator so each sampled time lands in one shared log.

    Returns (instrumented problem, log list). Used to audit that discrete
    schemes never request data past the current step time.
    """
    log: list[float] = []

    def wrap(op):
        def value(t):
            log.append(float(t))
            return op.value(t)

        deriv = None
        if op.derivative is not None:
            def deriv(t):
                log.append(float(t))
                return op.derivative(t)

        return TimeVaryingOperator(value, deriv)

    new_ops = {name: wrap(op) for name, op in problem.operators.items()}
    instrumented = replace(problem, operators=new_ops)
    log.clear()  # drop the construction-time shape probe
    return instrumented, log
