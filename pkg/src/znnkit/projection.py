"""Nonconvex projection sets and the distance-minimizing projector.

Projection replaces the elementwise activation with a set-valued map: the
error vector is projected onto a (possibly nonconvex) set containing the
origin. ``ProjectionActivation`` adapts a set to the activation slot of an
evolution formula, giving dynamics of the form ``edot = -gamma * R(e)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, InvalidSet

__all__ = [
    "ProjectionSet",
    "Box",
    "SphereShell",
    "HoleBox",
    "Lattice",
    "nonconvex_project",
    "ProjectionActivation",
]

_MEMBER_TOL = 1e-9


class ProjectionSet:
    """Base class; every concrete set must contain the zero vector."""

    def contains(self, x: np.ndarray) -> bool:
        raise NotImplementedError

    def _candidates(self, d: np.ndarray) -> list[np.ndarray]:
        """Finite candidate list guaranteed to include the nearest member."""
        raise NotImplementedError


@dataclass(frozen=True)
class Box(ProjectionSet):
    """Axis-aligned box [lo, hi]; bounds broadcast against the input."""

    lo: float | np.ndarray = -1.0
    hi: float | np.ndarray = 1.0

    def __post_init__(self):
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        if np.any(lo > 0) or np.any(hi < 0):
            raise InvalidSet("box must contain the origin (lo <= 0 <= hi)")

    def contains(self, x):
        return bool(np.all(x >= np.asarray(self.lo) - _MEMBER_TOL)
                    and np.all(x <= np.asarray(self.hi) + _MEMBER_TOL))

    def _candidates(self, d):
        return [np.clip(d, self.lo, self.hi)]


@dataclass(frozen=True)
class SphereShell(ProjectionSet):
    """Origin plus the shell r_inner <= ||x||_2 <= r_outer."""

    r_inner: float
    r_outer: float

    def __post_init__(self):
        if not 0.0 <= self.r_inner <= self.r_outer or self.r_outer <= 0:
            raise InvalidSet("shell radii must satisfy 0 <= r_inner <= r_outer, r_outer > 0")

    def contains(self, x):
        n = np.linalg.norm(x)
        return n <= _MEMBER_TOL or (self.r_inner - _MEMBER_TOL <= n <= self.r_outer + _MEMBER_TOL)

    def _candidates(self, d):
        cands = [np.zeros_like(d)]
        n = np.linalg.norm(d)
        if n == 0.0:
            return cands
        if n < self.r_inner:
            cands.append(d * (self.r_inner / n))
        elif n > self.r_outer:
            cands.append(d * (self.r_outer / n))
        else:
            cands.append(np.array(d, copy=True))
        return cands


@dataclass(frozen=True)
class HoleBox(ProjectionSet):
    """Box with an open ball of radius ``dead_zone_radius`` removed, plus the origin."""

    lo: float | np.ndarray = -1.0
    hi: float | np.ndarray = 1.0
    dead_zone_radius: float = 0.5

    def __post_init__(self):
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        if np.any(lo > 0) or np.any(hi < 0):
            raise InvalidSet("box must contain the origin (lo <= 0 <= hi)")
        if self.dead_zone_radius < 0:
            raise InvalidSet("dead zone radius must be nonnegative")

    def contains(self, x):
        n = np.linalg.norm(x)
        in_box = bool(np.all(x >= np.asarray(self.lo) - _MEMBER_TOL)
                      and np.all(x <= np.asarray(self.hi) + _MEMBER_TOL))
        return n <= _MEMBER_TOL or (in_box and n >= self.dead_zone_radius - _MEMBER_TOL)

    def _candidates(self, d):
        cands = [np.zeros_like(d)]
        r = self.dead_zone_radius
        p = np.clip(d, self.lo, self.hi)
        if np.linalg.norm(p) >= r - _MEMBER_TOL:
            cands.append(p)
        n = np.linalg.norm(d)
        if n > 0.0 and r > 0.0:
            # Push to the dead-zone boundary, then alternate clip/rescale so
            # the candidate stays a member when the ball pokes out of the box.
            q = d * (r / n)
            for _ in range(8):
                q = np.clip(q, self.lo, self.hi)
                nq = np.linalg.norm(q)
                if nq >= r - _MEMBER_TOL or nq == 0.0:
                    break
                q = q * (r / nq)
            if self.contains(q):
                cands.append(q)
        return cands


@dataclass(frozen=True)
class Lattice(ProjectionSet):
    """A finite explicit set of vectors; must include the zero vector."""

    points: np.ndarray = field(default_factory=lambda: np.zeros((1, 1)))

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.size == 0:
            raise InvalidSet("lattice is empty")
        if not np.any(np.all(np.abs(pts) <= _MEMBER_TOL, axis=1)):
            raise InvalidSet("lattice must contain the zero vector")
        object.__setattr__(self, "points", pts)

    def contains(self, x):
        return bool(np.any(np.linalg.norm(self.points - x, axis=1) <= _MEMBER_TOL))

    def _candidates(self, d):
        dists = np.linalg.norm(self.points - d, axis=1)
        return [self.points[i] for i in np.flatnonzero(dists == dists.min())]


def nonconvex_project(d, set_: ProjectionSet) -> np.ndarray:
    """Return the member of the set closest (Euclidean) to ``d``.

    Ties are broken deterministically by picking the lexicographically
    smallest candidate.
    """
    d = np.atleast_1d(np.asarray(d, dtype=float))
    if not np.all(np.isfinite(d)):
        raise InvalidInput("projection input contains non-finite entries")
    cands = set_._candidates(d)
    best = min(cands, key=lambda c: (np.linalg.norm(c - d), tuple(c)))
    return np.asarray(best, dtype=float)


@dataclass(frozen=True)
class ProjectionActivation:
    """Adapter exposing a projection set through the activation interface.

    Unlike true activations this maps the whole vector at once and is
    neither odd nor elementwise; it exists so evolution formulas can run
    nonconvex-projection dynamics without a dedicated formula kind.
    """

    set_: ProjectionSet

    def apply(self, u):
        return nonconvex_project(u, self.set_)
