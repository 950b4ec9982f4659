"""Problem zoo: error functions, Jacobians, time partials, model assembly.

Each problem kind defines a residual map e(x, t) whose zero set encodes the
time-varying solution. Matrix-shaped unknowns are stored flattened in
column-major order, so the standard identities vec(AXB) = (B^T kron A)vec(X)
apply directly and a single vector-valued solver path covers every kind.

Kinds and their operators:

======================  =========================================  ==========
kind                    residual                                   operators
======================  =========================================  ==========
linear_system           A x - b                                    A, b
stein                   vec(A X B + X - C)                         A, B, C
nonlinear_stationarity  A x - b + cubic * x**3                     A, b
matrix_square_root      vec(X @ X - A)                             A
matrix_inversion        vec(A X - I)                               A
equality_qp             [A x + D^T rho + b; D x - c]               A, D, b, c
linear_eq_ineq          [A x - b; C x + y*y - d]                   A, C, b, d
lyapunov                -(I kron A^T + A^T kron I) vec(X) + vec(Q) A, Q
sylvester               (I kron A - B^T kron I) vec(X) + vec(C)    A, B, C
yang_baxter             vec(X A X - A X A)                         A
dqm                     A x - b                                    A, b
==========================================================================

``equality_qp`` stacks the primal variable with the Lagrange multipliers;
``linear_eq_ineq`` converts the inequality block through a squared slack
variable y, stacking the unknowns as [x; y].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from .errors import InvalidInput, InvalidSpec, SingularJacobian
from .evolution import EvolutionSpec, evolution_rhs
from .noise import sample_noise
from .operators import TimeVaryingOperator, operator_derivative

__all__ = [
    "KINDS",
    "MATRIX_KINDS",
    "vec",
    "unvec",
    "ProblemInstance",
    "error_dim",
    "eval_error",
    "eval_jacobian",
    "eval_time_partial",
    "make_synthetic",
    "AssembledModel",
    "perturb_model",
    "model_rhs",
]

KINDS = (
    "linear_system",
    "stein",
    "nonlinear_stationarity",
    "matrix_square_root",
    "matrix_inversion",
    "equality_qp",
    "linear_eq_ineq",
    "lyapunov",
    "sylvester",
    "yang_baxter",
    "dqm",
)

MATRIX_KINDS = frozenset(
    {"stein", "matrix_square_root", "matrix_inversion", "lyapunov",
     "sylvester", "yang_baxter"})

_REQUIRED_OPS = {
    "linear_system": {"A", "b"},
    "stein": {"A", "B", "C"},
    "nonlinear_stationarity": {"A", "b"},
    "matrix_square_root": {"A"},
    "matrix_inversion": {"A"},
    "equality_qp": {"A", "D", "b", "c"},
    "linear_eq_ineq": {"A", "C", "b", "d"},
    "lyapunov": {"A", "Q"},
    "sylvester": {"A", "B", "C"},
    "yang_baxter": {"A"},
    "dqm": {"A", "b"},
}

_COND_LU_MAX = 1e8
_COND_SINGULAR = 1e12
_RIDGE = 1e-10


def vec(M) -> np.ndarray:
    """Column-major flattening of a matrix."""
    return np.asarray(M).reshape(-1, order="F")


def unvec(v, shape) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return np.asarray(v).reshape(shape, order="F")


@dataclass(frozen=True)
class ProblemInstance:
    """One problem kind with its named time-varying operators.

    ``state_dim`` counts the full flattened unknown, including multipliers
    and slack variables. ``ground_truth`` optionally maps t to the exact
    flattened solution. ``error_dim`` is derived from operator shapes at
    construction time.
    """

    kind: str
    operators: Mapping[str, TimeVaryingOperator]
    state_dim: int
    ground_truth: Optional[Callable[[float], np.ndarray]] = None
    params: Mapping[str, float] = field(default_factory=dict)
    error_dim: int = field(init=False, default=0)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpec(f"unknown problem kind {self.kind!r}")
        names = set(self.operators)
        required = _REQUIRED_OPS[self.kind]
        if names != required:
            raise InvalidSpec(
                f"{self.kind} requires operators {sorted(required)}, got {sorted(names)}")
        state, err = _infer_dims(self.kind, self.operators)
        if state != self.state_dim:
            raise InvalidSpec(
                f"state_dim {self.state_dim} inconsistent with operator shapes "
                f"(expected {state})")
        object.__setattr__(self, "error_dim", err)


def _infer_dims(kind: str, ops) -> tuple[int, int]:
    s = {name: op(0.0) for name, op in ops.items()}
    if kind in ("linear_system", "dqm"):
        m, n = np.atleast_2d(s["A"]).shape
        if s["b"].shape != (m,):
            raise InvalidSpec(f"b shape {s['b'].shape} does not match A rows {m}")
        return n, m
    if kind == "nonlinear_stationarity":
        n = s["A"].shape[0]
        if s["A"].shape != (n, n) or s["b"].shape != (n,):
            raise InvalidSpec("nonlinear_stationarity needs square A and matching b")
        return n, n
    if kind == "stein" or kind == "sylvester":
        n, m = s["A"].shape[0], s["B"].shape[0]
        if s["A"].shape != (n, n) or s["B"].shape != (m, m) or s["C"].shape != (n, m):
            raise InvalidSpec(f"{kind} needs A (n,n), B (m,m), C (n,m)")
        return n * m, n * m
    if kind in ("matrix_square_root", "matrix_inversion", "yang_baxter"):
        n = s["A"].shape[0]
        if s["A"].shape != (n, n):
            raise InvalidSpec(f"{kind} needs square A")
        return n * n, n * n
    if kind == "lyapunov":
        n = s["A"].shape[0]
        if s["A"].shape != (n, n) or s["Q"].shape != (n, n):
            raise InvalidSpec("lyapunov needs square A and Q of equal size")
        return n * n, n * n
    if kind == "equality_qp":
        n = s["A"].shape[0]
        m = s["D"].shape[0]
        if s["A"].shape != (n, n) or s["D"].shape != (m, n) \
                or s["b"].shape != (n,) or s["c"].shape != (m,):
            raise InvalidSpec("equality_qp needs A (n,n), D (m,n), b (n,), c (m,)")
        return n + m, n + m
    if kind == "linear_eq_ineq":
        p, n = np.atleast_2d(s["A"]).shape
        q = s["C"].shape[0]
        if s["C"].shape != (q, n) or s["b"].shape != (p,) or s["d"].shape != (q,):
            raise InvalidSpec("linear_eq_ineq needs A (p,n), C (q,n), b (p,), d (q,)")
        return n + q, p + q
    raise InvalidSpec(f"unknown problem kind {kind!r}")


def error_dim(p: ProblemInstance) -> int:
    return p.error_dim


def _check_state(p: ProblemInstance, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (p.state_dim,):
        raise InvalidInput(
            f"state shape {x.shape} does not match state_dim {p.state_dim}")
    return x


_OPS_MEMO = None


def _ops_at(p: ProblemInstance, t: float) -> dict:
    # One-slot memo: discrete steppers sample the same (problem, t) twice in
    # a row (residual log, then the next step's rhs). Keyed by identity, so
    # a live reference is held and the slot can never alias a new instance.
    global _OPS_MEMO
    memo = _OPS_MEMO
    if memo is not None and memo[0] is p and memo[1] == t:
        return memo[2]
    s = {name: op(t) for name, op in p.operators.items()}
    _OPS_MEMO = (p, t, s)
    return s


def _dops_at(p: ProblemInstance, t: float, dsamples) -> dict:
    out = {}
    for name, op in p.operators.items():
        if dsamples is not None and name in dsamples:
            out[name] = np.asarray(dsamples[name], dtype=float)
        else:
            out[name] = operator_derivative(op, t)
    return out


def eval_error(p: ProblemInstance, x, t: float) -> np.ndarray:
    """Flattened residual e(x, t) of the problem kind."""
    return _error_from_samples(p, _check_state(p, x), _ops_at(p, t))


def _error_from_samples(p: ProblemInstance, x, s: dict) -> np.ndarray:
    k = p.kind
    if k in ("linear_system", "dqm"):
        return s["A"] @ x - s["b"]
    if k == "nonlinear_stationarity":
        cubic = p.params.get("cubic", 0.0)
        return s["A"] @ x - s["b"] + cubic * x ** 3
    if k == "stein":
        X = unvec(x, s["C"].shape)
        return vec(s["A"] @ X @ s["B"] + X - s["C"])
    if k == "matrix_square_root":
        X = unvec(x, s["A"].shape)
        return vec(X @ X - s["A"])
    if k == "matrix_inversion":
        n = s["A"].shape[0]
        X = unvec(x, (n, n))
        return vec(s["A"] @ X - np.eye(n))
    if k == "equality_qp":
        n = s["A"].shape[0]
        xv, rho = x[:n], x[n:]
        return np.concatenate([
            s["A"] @ xv + s["D"].T @ rho + s["b"],
            s["D"] @ xv - s["c"],
        ])
    if k == "linear_eq_ineq":
        n = s["A"].shape[1]
        xv, y = x[:n], x[n:]
        return np.concatenate([
            s["A"] @ xv - s["b"],
            s["C"] @ xv + y * y - s["d"],
        ])
    if k == "lyapunov":
        n = s["A"].shape[0]
        eye = np.eye(n)
        M = np.kron(eye, s["A"].T) + np.kron(s["A"].T, eye)
        return -M @ x + vec(s["Q"])
    if k == "sylvester":
        n, m = s["C"].shape
        M = np.kron(np.eye(m), s["A"]) - np.kron(s["B"].T, np.eye(n))
        return M @ x + vec(s["C"])
    if k == "yang_baxter":
        A = s["A"]
        X = unvec(x, A.shape)
        return vec(X @ A @ X - A @ X @ A)
    raise InvalidSpec(f"unknown problem kind {k!r}")


def eval_jacobian(p: ProblemInstance, x, t: float) -> np.ndarray:
    """Analytic Jacobian de/dx of the flattened residual."""
    return _jacobian_from_samples(p, _check_state(p, x), _ops_at(p, t))


def _jacobian_from_samples(p: ProblemInstance, x, s: dict) -> np.ndarray:
    k = p.kind
    if k in ("linear_system", "dqm"):
        return np.atleast_2d(s["A"]).copy()
    if k == "nonlinear_stationarity":
        cubic = p.params.get("cubic", 0.0)
        return s["A"] + 3.0 * cubic * np.diag(x ** 2)
    if k == "stein":
        nm = p.state_dim
        return np.kron(s["B"].T, s["A"]) + np.eye(nm)
    if k == "matrix_square_root":
        n = s["A"].shape[0]
        X = unvec(x, (n, n))
        eye = np.eye(n)
        return np.kron(eye, X) + np.kron(X.T, eye)
    if k == "matrix_inversion":
        n = s["A"].shape[0]
        return np.kron(np.eye(n), s["A"])
    if k == "equality_qp":
        m = s["D"].shape[0]
        return np.block([
            [s["A"], s["D"].T],
            [s["D"], np.zeros((m, m))],
        ])
    if k == "linear_eq_ineq":
        pdim, n = np.atleast_2d(s["A"]).shape
        q = s["C"].shape[0]
        y = x[n:]
        return np.block([
            [s["A"], np.zeros((pdim, q))],
            [s["C"], 2.0 * np.diag(y)],
        ])
    if k == "lyapunov":
        n = s["A"].shape[0]
        eye = np.eye(n)
        return -(np.kron(eye, s["A"].T) + np.kron(s["A"].T, eye))
    if k == "sylvester":
        n, m = s["C"].shape
        return np.kron(np.eye(m), s["A"]) - np.kron(s["B"].T, np.eye(n))
    if k == "yang_baxter":
        A = s["A"]
        X = unvec(x, A.shape)
        eye = np.eye(A.shape[0])
        return np.kron((A @ X).T, eye) + np.kron(eye, X @ A) - np.kron(A.T, A)
    raise InvalidSpec(f"unknown problem kind {k!r}")


def eval_time_partial(p: ProblemInstance, x, t: float, dsamples=None) -> np.ndarray:
    """Partial de/dt holding x fixed, built from operator derivatives.

    ``dsamples`` optionally supplies precomputed derivative samples by
    operator name (discrete steppers pass backward differences here);
    missing entries fall back to analytic or central-difference derivatives.
    """
    return _partial_from_samples(p, _check_state(p, x), _ops_at(p, t),
                                 _dops_at(p, t, dsamples))


def _partial_from_samples(p: ProblemInstance, x, s: dict, d: dict) -> np.ndarray:
    k = p.kind
    if k in ("linear_system", "dqm", "nonlinear_stationarity"):
        return d["A"] @ x - d["b"]
    if k == "stein":
        X = unvec(x, s["C"].shape)
        return vec(d["A"] @ X @ s["B"] + s["A"] @ X @ d["B"] - d["C"])
    if k == "matrix_square_root":
        return vec(-d["A"])
    if k == "matrix_inversion":
        n = s["A"].shape[0]
        X = unvec(x, (n, n))
        return vec(d["A"] @ X)
    if k == "equality_qp":
        n = s["A"].shape[0]
        xv, rho = x[:n], x[n:]
        return np.concatenate([
            d["A"] @ xv + d["D"].T @ rho + d["b"],
            d["D"] @ xv - d["c"],
        ])
    if k == "linear_eq_ineq":
        n = s["A"].shape[1]
        xv = x[:n]
        return np.concatenate([
            d["A"] @ xv - d["b"],
            d["C"] @ xv - d["d"],
        ])
    if k == "lyapunov":
        n = s["A"].shape[0]
        eye = np.eye(n)
        dM = np.kron(eye, d["A"].T) + np.kron(d["A"].T, eye)
        return -dM @ x + vec(d["Q"])
    if k == "sylvester":
        n, m = s["C"].shape
        dM = np.kron(np.eye(m), d["A"]) - np.kron(d["B"].T, np.eye(n))
        return dM @ x + vec(d["C"])
    if k == "yang_baxter":
        A, dA = s["A"], d["A"]
        X = unvec(x, A.shape)
        return vec(X @ dA @ X - dA @ X @ A - A @ X @ dA)
    raise InvalidSpec(f"unknown problem kind {k!r}")


# ---------------------------------------------------------------------------
# synthetic instances


def _trig_scalar_params(rng, shape):
    base = rng.uniform(-1.0, 1.0, shape)
    amp = rng.uniform(0.4, 0.9, shape)
    omega = rng.uniform(0.5, 1.2, shape)
    phase = rng.uniform(0.0, 2.0 * np.pi, shape)
    return base, amp, omega, phase


def _trig_family(rng, shape):
    """Smooth entrywise-trigonometric array family with analytic derivative."""
    base, amp, omega, phase = _trig_scalar_params(rng, shape)

    def value(t):
        return base + amp * np.sin(omega * t + phase)

    def deriv(t):
        return amp * omega * np.cos(omega * t + phase)

    return value, deriv


def _spd_family(rng, n, lo=2.0, hi=4.0, amp=0.3):
    """Symmetric positive-definite family Q diag(lam(t)) Q^T."""
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    lam = rng.uniform(lo, hi, n)
    omega = rng.uniform(0.5, 1.2, n)
    phase = rng.uniform(0.0, 2.0 * np.pi, n)

    def value(t):
        return (Q * (lam + amp * np.sin(omega * t + phase))) @ Q.T

    def deriv(t):
        return (Q * (amp * omega * np.cos(omega * t + phase))) @ Q.T

    return value, deriv


def _contraction_family(rng, n, norm_cap=0.45):
    """Smooth matrix family with spectral norm bounded by norm_cap."""
    M0 = rng.uniform(-1.0, 1.0, (n, n))
    M1 = rng.uniform(-1.0, 1.0, (n, n))
    omega = rng.uniform(0.5, 1.2)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    amp = 0.25
    scale = norm_cap / (np.linalg.norm(M0, 2) + amp * np.linalg.norm(M1, 2))

    def value(t):
        return scale * (M0 + amp * np.sin(omega * t + phase) * M1)

    def deriv(t):
        return scale * amp * omega * np.cos(omega * t + phase) * M1

    return value, deriv


def make_synthetic(kind: str, dim: int, seed: int = 0) -> ProblemInstance:
    """Construct a smooth instance whose exact solution is known.

    The data operator is derived from a chosen trigonometric trajectory so
    the residual vanishes identically on it; operators include analytic
    derivatives and conditioning is controlled by construction. ``dim`` is
    the vector length for vector kinds and the matrix side for matrix kinds.
    Deterministic in ``seed``.
    """
    if kind not in KINDS:
        raise InvalidInput(f"unknown problem kind {kind!r}")
    if dim < 1 or (kind in MATRIX_KINDS and dim < 2):
        raise InvalidInput(f"dim {dim} too small for kind {kind!r}")
    rng = np.random.default_rng(seed)
    n = dim

    if kind in ("linear_system", "dqm"):
        A, dA = _spd_family(rng, n)
        xs, dxs = _trig_family(rng, n)
        ops = {
            "A": TimeVaryingOperator(A, dA),
            "b": TimeVaryingOperator(lambda t: A(t) @ xs(t),
                                     lambda t: dA(t) @ xs(t) + A(t) @ dxs(t)),
        }
        return ProblemInstance(kind, ops, n, ground_truth=xs)

    if kind == "nonlinear_stationarity":
        cubic = 0.5
        A, dA = _spd_family(rng, n)
        xs, dxs = _trig_family(rng, n)
        ops = {
            "A": TimeVaryingOperator(A, dA),
            "b": TimeVaryingOperator(
                lambda t: A(t) @ xs(t) + cubic * xs(t) ** 3,
                lambda t: dA(t) @ xs(t) + A(t) @ dxs(t)
                + 3.0 * cubic * xs(t) ** 2 * dxs(t)),
        }
        return ProblemInstance(kind, ops, n, ground_truth=xs,
                               params={"cubic": cubic})

    if kind == "stein":
        # ||A|| * ||B|| < 1 keeps I + B^T kron A far from singular.
        A, dA = _contraction_family(rng, n)
        B, dB = _contraction_family(rng, n)
        Xs, dXs = _trig_family(rng, (n, n))

        def C(t):
            return A(t) @ Xs(t) @ B(t) + Xs(t)

        def dC(t):
            return (dA(t) @ Xs(t) @ B(t) + A(t) @ dXs(t) @ B(t)
                    + A(t) @ Xs(t) @ dB(t) + dXs(t))

        ops = {
            "A": TimeVaryingOperator(A, dA),
            "B": TimeVaryingOperator(B, dB),
            "C": TimeVaryingOperator(C, dC),
        }
        return ProblemInstance(kind, ops, n * n,
                               ground_truth=lambda t: vec(Xs(t)))

    if kind == "matrix_square_root":
        # X*(t) stays positive-definite, so I kron X + X^T kron I is regular.
        Xs, dXs = _spd_family(rng, n, lo=1.5, hi=2.5, amp=0.3)
        ops = {
            "A": TimeVaryingOperator(
                lambda t: Xs(t) @ Xs(t),
                lambda t: dXs(t) @ Xs(t) + Xs(t) @ dXs(t)),
        }
        return ProblemInstance(kind, ops, n * n,
                               ground_truth=lambda t: vec(Xs(t)))

    if kind == "matrix_inversion":
        A, dA = _spd_family(rng, n)
        ops = {"A": TimeVaryingOperator(A, dA)}
        return ProblemInstance(kind, ops, n * n,
                               ground_truth=lambda t: vec(np.linalg.inv(A(t))))

    if kind == "equality_qp":
        m = max(1, n // 2)
        A, dA = _spd_family(rng, n)
        D, dD = _trig_family(rng, (m, n))
        xs, dxs = _trig_family(rng, n)
        rs, drs = _trig_family(rng, m)
        ops = {
            "A": TimeVaryingOperator(A, dA),
            "D": TimeVaryingOperator(D, dD),
            "b": TimeVaryingOperator(
                lambda t: -(A(t) @ xs(t) + D(t).T @ rs(t)),
                lambda t: -(dA(t) @ xs(t) + A(t) @ dxs(t)
                            + dD(t).T @ rs(t) + D(t).T @ drs(t))),
            "c": TimeVaryingOperator(
                lambda t: D(t) @ xs(t),
                lambda t: dD(t) @ xs(t) + D(t) @ dxs(t)),
        }
        truth = lambda t: np.concatenate([xs(t), rs(t)])
        return ProblemInstance(kind, ops, n + m, ground_truth=truth)

    if kind == "linear_eq_ineq":
        q = max(1, n // 2)
        A, dA = _spd_family(rng, n)
        C, dC = _trig_family(rng, (q, n))
        xs, dxs = _trig_family(rng, n)
        # Slack stays >= 0.8 so its Jacobian block 2*diag(y) is regular.
        yom = rng.uniform(0.5, 1.2, q)
        yph = rng.uniform(0.0, 2.0 * np.pi, q)
        ys = lambda t: 1.2 + 0.4 * np.sin(yom * t + yph)
        dys = lambda t: 0.4 * yom * np.cos(yom * t + yph)
        ops = {
            "A": TimeVaryingOperator(A, dA),
            "C": TimeVaryingOperator(C, dC),
            "b": TimeVaryingOperator(
                lambda t: A(t) @ xs(t),
                lambda t: dA(t) @ xs(t) + A(t) @ dxs(t)),
            "d": TimeVaryingOperator(
                lambda t: C(t) @ xs(t) + ys(t) ** 2,
                lambda t: dC(t) @ xs(t) + C(t) @ dxs(t)
                + 2.0 * ys(t) * dys(t)),
        }
        truth = lambda t: np.concatenate([xs(t), ys(t)])
        return ProblemInstance(kind, ops, n + q, ground_truth=truth)

    if kind == "lyapunov":
        A, dA = _spd_family(rng, n)
        M, dM = _trig_family(rng, (n, n))
        Xs = lambda t: 0.5 * (M(t) + M(t).T)
        dXs = lambda t: 0.5 * (dM(t) + dM(t).T)
        ops = {
            "A": TimeVaryingOperator(A, dA),
            "Q": TimeVaryingOperator(
                lambda t: A(t).T @ Xs(t) + Xs(t) @ A(t),
                lambda t: dA(t).T @ Xs(t) + A(t).T @ dXs(t)
                + dXs(t) @ A(t) + Xs(t) @ dA(t)),
        }
        return ProblemInstance(kind, ops, n * n,
                               ground_truth=lambda t: vec(Xs(t)))

    if kind == "sylvester":
        # Eigenvalue separation of A and B keeps I kron A - B^T kron I regular.
        A, dA = _spd_family(rng, n, lo=3.0, hi=4.0, amp=0.2)
        B, dB = _spd_family(rng, n, lo=0.5, hi=1.0, amp=0.1)
        Xs, dXs = _trig_family(rng, (n, n))
        ops = {
            "A": TimeVaryingOperator(A, dA),
            "B": TimeVaryingOperator(B, dB),
            "C": TimeVaryingOperator(
                lambda t: Xs(t) @ B(t) - A(t) @ Xs(t),
                lambda t: dXs(t) @ B(t) + Xs(t) @ dB(t)
                - dA(t) @ Xs(t) - A(t) @ dXs(t)),
        }
        return ProblemInstance(kind, ops, n * n,
                               ground_truth=lambda t: vec(Xs(t)))

    if kind == "yang_baxter":
        # X* = A solves X A X = A X A for any A.
        A, dA = _spd_family(rng, n)
        ops = {"A": TimeVaryingOperator(A, dA)}
        return ProblemInstance(kind, ops, n * n,
                               ground_truth=lambda t: vec(A(t)))

    raise InvalidInput(f"unknown problem kind {kind!r}")


# ---------------------------------------------------------------------------
# model assembly


@dataclass(frozen=True)
class AssembledModel:
    """A problem paired with an evolution formula (and optional noise)."""

    problem: ProblemInstance
    evolution: EvolutionSpec
    noise: object = None

    @property
    def aux_dim(self) -> int:
        return self.problem.error_dim if self.evolution.uses_integral else 0


def perturb_model(m: AssembledModel, spec) -> AssembledModel:
    """Attach a disturbance to the evolution target: edot = F(e) + n(t).

    The noise must be scalar (broadcast) or match the error dimension.
    """
    probe = sample_noise(spec, 0.0, step_index=0)
    if probe.shape not in ((1,), (m.problem.error_dim,)):
        raise InvalidInput(
            f"noise dimension {probe.shape[0]} does not match error dimension "
            f"{m.problem.error_dim}")
    return AssembledModel(m.problem, m.evolution, noise=spec)


def model_rhs(m: AssembledModel, x, aux, t: float, dsamples=None,
              step_index=None):
    """Explicit state derivative: solve J xdot = target - de/dt.

    Square well-conditioned Jacobians go through an LU solve; non-square or
    near-singular ones fall back to ridge-regularized least squares. A
    condition estimate beyond 1e12 raises SingularJacobian.
    """
    p = m.problem
    x = _check_state(p, x)
    s = _ops_at(p, t)
    e = _error_from_samples(p, x, s)
    target, auxdot = evolution_rhs(e, aux, t, m.evolution)
    if m.noise is not None:
        target = target + sample_noise(m.noise, t, step_index)
    J = _jacobian_from_samples(p, x, s)
    rhs = target - _partial_from_samples(p, x, s, _dops_at(p, t, dsamples))
    if J.shape == (1, 1):
        a = J[0, 0]
        cond = 1.0 if np.isfinite(a) and a != 0.0 else np.inf
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            cond = np.linalg.cond(J)
    if not np.isfinite(cond) or cond > _COND_SINGULAR:
        raise SingularJacobian(t, cond)
    if J.shape[0] == J.shape[1] and cond < _COND_LU_MAX:
        xdot = np.linalg.solve(J, rhs)
    else:
        n = J.shape[1]
        xdot = np.linalg.solve(J.T @ J + _RIDGE * np.eye(n), J.T @ rhs)
    return xdot, auxdot
