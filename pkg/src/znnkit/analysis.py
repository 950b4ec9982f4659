"""Post-run analysis: rate fitting, noise sweeps, order-of-accuracy tables."""

from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .discretize import (SCHEME_KINDS, Scheme, Trajectory, empirical_order,
                         solve_discrete)
from .errors import InvalidInput, NothingToFit
from .evolution import EvolutionSpec
from .noise import BoundedRandom, Constant, Linear, NoiseSpec
from .problems import AssembledModel, ProblemInstance

__all__ = ["ConvergenceReport", "fit_convergence_rate", "TOLERANCE_THRESHOLDS",
           "SweepResult", "noise_sweep", "make_noise", "OrderReport",
           "order_report"]

TOLERANCE_THRESHOLDS = (1e-2, 1e-4, 1e-6)

_FIT_FLOOR = 1e-10
_R2_EXPONENTIAL = 0.99
_STATIC_RESIDUAL = 1e-10


@dataclass(frozen=True)
class ConvergenceReport:
    """Exponential-decay fit of a residual trajectory.

    ``rate`` is -slope of the log-residual line and is only populated when
    the fit is convincingly exponential (R^2 >= 0.99); super- or
    sub-exponential decays leave it None with ``exponential`` False.
    """

    rate: Optional[float]
    exponential: bool
    r_squared: float
    fit_residual: float
    time_to_tolerance: dict
    terminal_residual: float


def _time_to_tolerance(times, residuals, tol):
    """First crossing time of ``tol``, log-linearly interpolated."""
    below = np.nonzero(residuals <= tol)[0]
    if below.size == 0:
        return None
    k = int(below[0])
    if k == 0:
        return float(times[0])
    r_prev, r_k = residuals[k - 1], residuals[k]
    if r_k <= 0.0:
        return float(times[k])
    frac = (np.log(r_prev) - np.log(tol)) / (np.log(r_prev) - np.log(r_k))
    return float(times[k - 1] + frac * (times[k] - times[k - 1]))


def fit_convergence_rate(traj: Trajectory) -> ConvergenceReport:
    """Least-squares line fit of log residual vs time.

    Fits over the window before the residual first hits 1e-10 (beyond that
    the log is dominated by rounding). Needs at least 20 positive samples.
    """
    times = np.asarray(traj.times, dtype=float)
    res = np.asarray(traj.residual_norms, dtype=float)
    if not np.any(res > 0.0):
        raise NothingToFit("all residuals are zero")
    cutoff = np.nonzero(res <= _FIT_FLOOR)[0]
    end = int(cutoff[0]) if cutoff.size else len(res)
    t_fit = times[:end]
    r_fit = res[:end]
    keep = r_fit > 0.0
    t_fit, r_fit = t_fit[keep], r_fit[keep]
    if t_fit.size < 20:
        raise NothingToFit(
            f"need >= 20 positive residual samples, got {t_fit.size}")

    log_r = np.log(r_fit)
    slope, intercept = np.polyfit(t_fit, log_r, 1)
    predicted = slope * t_fit + intercept
    ss_res = float(np.sum((log_r - predicted) ** 2))
    ss_tot = float(np.sum((log_r - log_r.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    exponential = r_squared >= _R2_EXPONENTIAL
    return ConvergenceReport(
        rate=float(-slope) if exponential else None,
        exponential=exponential,
        r_squared=r_squared,
        fit_residual=float(np.sqrt(ss_res / t_fit.size)),
        time_to_tolerance={tol: _time_to_tolerance(times, res, tol)
                           for tol in TOLERANCE_THRESHOLDS},
        terminal_residual=float(res[-1]),
    )


def make_noise(kind: str, magnitude: float, seed: int = 0) -> Optional[NoiseSpec]:
    """Noise spec of the given kind scaled to ``magnitude`` (0 -> no noise)."""
    if magnitude < 0:
        raise InvalidInput(f"negative noise magnitude {magnitude}")
    if magnitude == 0.0:
        return None
    if kind == "constant":
        return Constant(magnitude)
    if kind == "linear":
        return Linear(magnitude)
    if kind == "bounded_random":
        return BoundedRandom(bound=magnitude, seed=seed)
    raise InvalidInput(f"unknown noise kind {kind!r}")


@dataclass(frozen=True)
class SweepResult:
    """Terminal residual grid: one row per evolution formula, one column
    per noise magnitude."""

    noise_kind: str
    formulas: tuple
    magnitudes: tuple
    terminal_residuals: np.ndarray

    def csv(self) -> str:
        buf = io.StringIO()
        buf.write("formula," + ",".join("%.17g" % m for m in self.magnitudes)
                  + "\n")
        for i, name in enumerate(self.formulas):
            row = ",".join("%.17g" % v for v in self.terminal_residuals[i])
            buf.write(f"{name},{row}\n")
        return buf.getvalue()

    def markdown(self) -> str:
        head = "| formula | " + " | ".join(
            f"{self.noise_kind}={m:g}" for m in self.magnitudes) + " |"
        sep = "|" + "---|" * (len(self.magnitudes) + 1)
        lines = [head, sep]
        for i, name in enumerate(self.formulas):
            cells = " | ".join(f"{v:.3e}" for v in self.terminal_residuals[i])
            lines.append(f"| {name} | {cells} |")
        return "\n".join(lines) + "\n"


def noise_sweep(problem: ProblemInstance, x0, formulas: Mapping[str, EvolutionSpec],
                noise_kind: str, magnitudes, scheme: Scheme, n_steps: int,
                seed: int = 0, max_workers: Optional[int] = None) -> SweepResult:
    """Terminal residuals for every formula x magnitude pair.

    The runs are independent, so they fan out across a thread pool.
    """
    magnitudes = tuple(float(m) for m in magnitudes)
    names = tuple(formulas)
    if len(names) < 2:
        raise InvalidInput("sweep needs at least 2 evolution formulas")
    if len(magnitudes) < 2:
        raise InvalidInput("sweep needs at least 2 noise magnitudes")

    def run(name, magnitude):
        model = AssembledModel(problem, formulas[name],
                               noise=make_noise(noise_kind, magnitude, seed))
        traj = solve_discrete(model, x0, scheme, n_steps)
        return float(traj.residual_norms[-1])

    grid = np.zeros((len(names), len(magnitudes)))
    jobs = [(i, j, name, mag) for i, name in enumerate(names)
            for j, mag in enumerate(magnitudes)]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = {pool.submit(run, name, mag): (i, j)
                   for i, j, name, mag in jobs}
        for fut, (i, j) in futures.items():
            grid[i, j] = fut.result()
    return SweepResult(noise_kind=noise_kind, formulas=names,
                       magnitudes=magnitudes, terminal_residuals=grid)


@dataclass(frozen=True)
class OrderReport:
    """Empirical order of accuracy per discrete scheme.

    ``orders`` maps scheme kind to the average log2 residual ratio under
    gap halving, or the string "exact" when there is no truncation error
    to measure (static problems resolve to rounding level).
    """

    etas: tuple
    residuals: dict
    orders: dict

    def markdown(self) -> str:
        lines = ["| scheme | " + " | ".join(f"eta={e:g}" for e in self.etas)
                 + " | order |",
                 "|" + "---|" * (len(self.etas) + 2)]
        for name in self.orders:
            cells = " | ".join(f"{v:.3e}" for v in self.residuals[name])
            order = self.orders[name]
            shown = order if isinstance(order, str) else f"{order:.2f}"
            lines.append(f"| {name} | {cells} | {shown} |")
        return "\n".join(lines) + "\n"

    def csv(self) -> str:
        buf = io.StringIO()
        buf.write("scheme," + ",".join("%.17g" % e for e in self.etas)
                  + ",order\n")
        for name in self.orders:
            row = ",".join("%.17g" % v for v in self.residuals[name])
            order = self.orders[name]
            shown = order if isinstance(order, str) else "%.17g" % order
            buf.write(f"{name},{row},{shown}\n")
        return buf.getvalue()


def order_report(m: AssembledModel, halvings: int, eta0: float = 4e-3,
                 horizon: float = 3.0, schemes=SCHEME_KINDS) -> OrderReport:
    """Gap-halving sweep over the discrete schemes.

    The fitted order per scheme is the mean log2 of successive steady
    residual ratios; first-order schemes land near 1, the Taylor rule
    near 2.
    """
    if halvings < 3:
        raise InvalidInput(f"need at least 3 halvings, got {halvings}")
    etas = tuple(eta0 / 2 ** i for i in range(halvings + 1))
    residuals = {}
    orders = {}
    for kind in schemes:
        pairs = empirical_order(m, kind, etas, horizon=horizon)
        values = tuple(r for _, r in pairs)
        residuals[kind] = values
        if max(values) <= _STATIC_RESIDUAL:
            orders[kind] = "exact"
        else:
            ratios = [values[i] / values[i + 1] for i in range(len(values) - 1)
                      if values[i + 1] > 0.0]
            if not ratios:
                orders[kind] = "exact"
            else:
                orders[kind] = float(np.mean(np.log2(ratios)))
    return OrderReport(etas=etas, residuals=residuals, orders=orders)
