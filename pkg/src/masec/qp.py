"""Exact solver for the two-variable position QP.

The problem

    minimize    curvature / 2 * t^T t + linear^T t
    subject to  t in [-a, a]^2,   n_j^T t >= b_j

is the Euclidean projection of ``-linear / curvature`` onto a convex
polygon.  In two dimensions the minimizer has at most two independent
active constraints, so it is found exactly by enumerating the unconstrained
point, the projections onto every constraint line and the intersections of
every pair of lines, and keeping the closest feasible candidate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import TransmitRegion
from .errors import InvalidInputError, QPInfeasibleError

__all__ = ["Qp2dProblem", "solve_qp2d", "qp_objective", "constraint_matrix"]

FEAS_TOL = 1e-12


@dataclass(frozen=True)
class Qp2dProblem:
    curvature: float
    linear: np.ndarray
    box: TransmitRegion
    halfplanes: list = field(default_factory=list)  # (normal, offset): normal^T t >= offset

    def __post_init__(self):
        if not self.curvature > 0:
            raise InvalidInputError("curvature must be positive")
        object.__setattr__(self, "linear", np.asarray(self.linear, dtype=float).reshape(2))
        hp = []
        for a, b in self.halfplanes:
            a = np.asarray(a, dtype=float).reshape(2)
            if not np.linalg.norm(a) > 0:
                raise InvalidInputError("half-plane normal must be non-zero")
            hp.append((a, float(b)))
        object.__setattr__(self, "halfplanes", hp)

    @property
    def center(self):
        return -self.linear / self.curvature


def constraint_matrix(problem):
    """Rows ``(normals, offsets)`` of all constraints ``normal^T t >= offset``.

    The first four rows are the box edges.
    """
    h = problem.box.half_width
    normals = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)]
    offsets = [-h, -h, -h, -h]
    for a, b in problem.halfplanes:
        normals.append(tuple(a))
        offsets.append(b)
    return np.array(normals, dtype=float), np.array(offsets, dtype=float)


def qp_objective(problem, t):
    t = np.asarray(t, dtype=float)
    return 0.5 * problem.curvature * float(t @ t) + float(problem.linear @ t)


def solve_qp2d(problem):
    """Unique minimizer of ``problem``; raises ``QPInfeasibleError`` if the polygon is empty."""
    normals, offsets = constraint_matrix(problem)
    unit = normals / np.linalg.norm(normals, axis=1)[:, None]
    uoff = offsets / np.linalg.norm(normals, axis=1)
    c = problem.center
    tol = FEAS_TOL * max(1.0, problem.box.half_width, float(np.max(np.abs(uoff))))

    proj = c[None, :] + (uoff - unit @ c)[:, None] * unit
    # pairwise line intersections by Cramer's rule
    ii, jj = np.triu_indices(len(unit), k=1)
    det = unit[ii, 0] * unit[jj, 1] - unit[ii, 1] * unit[jj, 0]
    ok = np.abs(det) >= 1e-14
    ii, jj, det = ii[ok], jj[ok], det[ok]
    cross = np.column_stack([
        (uoff[ii] * unit[jj, 1] - unit[ii, 1] * uoff[jj]) / det,
        (unit[ii, 0] * uoff[jj] - uoff[ii] * unit[jj, 0]) / det,
    ])
    pts = np.vstack([c[None, :], proj, cross])
    violation = np.max(uoff[None, :] - pts @ unit.T, axis=1)
    feasible = violation <= tol
    if not np.any(feasible):
        worst = int(np.argmin(violation))
        viol = np.nonzero(uoff - unit @ pts[worst] > tol)[0]
        raise QPInfeasibleError(viol.tolist())
    pts = pts[feasible]
    dist = np.sum((pts - c) ** 2, axis=1)
    best = np.min(dist)
    # ties (up to roundoff) resolved towards the lexicographically smallest point
    ties = pts[dist <= best + 1e-15 * max(best, 1e-30)]
    order = np.lexsort((ties[:, 1], ties[:, 0]))
    return ties[order[0]].copy()
