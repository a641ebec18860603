"""Brute-force LP reference solver for desk-scale instances.

Enumerates every choice of n active constraints, solves the linear system,
keeps feasible intersection points, and scores them. Feasibility of regions
without vertices is decided by re-running the enumeration inside a huge
bounding box; unboundedness by enumerating the vertices of the recession
cone clipped to the unit box and looking for a cost-improving direction.
Exhaustive and independent of the pivoting solver, so the two can check
each other.
"""

from __future__ import annotations

import time
from itertools import combinations

import numpy as np

from .problem import (
    EQ,
    GEQ,
    LEQ,
    MAXIMIZE,
    STATUS_INFEASIBLE,
    STATUS_OPTIMAL,
    STATUS_UNBOUNDED,
    LPProblem,
    LPSolution,
)

MAX_VARS = 4
MAX_CONSTRAINTS = 12
_FEAS_TOL = 1e-7
_SINGULAR_TOL = 1e-9
_BOX = 1e6


class InstanceTooLarge(ValueError):
    pass


def _constraint_system(p: LPProblem):
    """Rows plus finite bounds as one (A, rels, b) system."""
    A = [r.a for r in p.rows]
    rels = [r.rel for r in p.rows]
    b = [r.b for r in p.rows]
    for j, (lo, hi) in enumerate(p.bounds):
        if lo is not None:
            e = np.zeros(p.n)
            e[j] = 1.0
            A.append(e)
            rels.append(GEQ)
            b.append(lo)
        if hi is not None:
            e = np.zeros(p.n)
            e[j] = 1.0
            A.append(e)
            rels.append(LEQ)
            b.append(hi)
    if A:
        return np.array(A), rels, np.array(b, dtype=float)
    return np.zeros((0, p.n)), rels, np.zeros(0)


def _with_box(A, rels, b, n, radius):
    eyes = np.eye(n)
    A2 = np.vstack([A, eyes, eyes])
    rels2 = list(rels) + [LEQ] * n + [GEQ] * n
    b2 = np.concatenate([b, np.full(n, radius), np.full(n, -radius)])
    return A2, rels2, b2


def _feasible_points(A, rels, b, n) -> np.ndarray:
    """All intersection points of n constraints that satisfy every constraint."""
    k = A.shape[0]
    if k < n:
        return np.zeros((0, n))
    subsets = list(combinations(range(k), n))
    mats = A[np.array(subsets)]
    rhs = b[np.array(subsets)]
    dets = np.abs(np.linalg.det(mats))
    keep = dets > _SINGULAR_TOL
    if not keep.any():
        return np.zeros((0, n))
    pts = np.linalg.solve(mats[keep], rhs[keep][..., np.newaxis])[..., 0]
    vals = pts @ A.T  # (p, k)
    ok = np.ones(len(pts), dtype=bool)
    for i, rel in enumerate(rels):
        col = vals[:, i]
        if rel == LEQ:
            ok &= col <= b[i] + _FEAS_TOL
        elif rel == GEQ:
            ok &= col >= b[i] - _FEAS_TOL
        else:
            ok &= np.abs(col - b[i]) <= _FEAS_TOL
    return pts[ok]


def _recession_rows(p: LPProblem):
    """Homogenized constraints the recession cone must satisfy."""
    A = [r.a for r in p.rows]
    rels = [r.rel for r in p.rows]
    for j, (lo, hi) in enumerate(p.bounds):
        e = np.zeros(p.n)
        e[j] = 1.0
        if lo is not None:
            A.append(e)
            rels.append(GEQ)
        if hi is not None:
            A.append(e.copy())
            rels.append(LEQ)
    if A:
        return np.array(A), rels, np.zeros(len(A))
    return np.zeros((0, p.n)), rels, np.zeros(0)


def oracle_solve(p: LPProblem) -> LPSolution:
    """Solve exhaustively. Only valid for n <= 4 and m + bound count <= 12."""
    started = time.monotonic()
    if p.n > MAX_VARS or p.m + p.bound_count() > MAX_CONSTRAINTS:
        raise InstanceTooLarge(
            f"oracle accepts n <= {MAX_VARS} and m + bounds <= {MAX_CONSTRAINTS}"
        )
    cmin = -p.c if p.sense == MAXIMIZE else p.c

    A, rels, b = _constraint_system(p)
    vertices = _feasible_points(A, rels, b, p.n)

    boxed = None
    if len(vertices) == 0:
        boxed = _feasible_points(*_with_box(A, rels, b, p.n, _BOX), p.n)
        if len(boxed) == 0:
            return LPSolution(
                status=STATUS_INFEASIBLE,
                x=None,
                objective=None,
                iterations=0,
                info=_info(STATUS_INFEASIBLE, started),
            )

    # Feasible. Look for an improving direction in the clipped recession cone.
    Ad, drels, db = _recession_rows(p)
    dirs = _feasible_points(*_with_box(Ad, drels, db, p.n, 1.0), p.n)
    if len(dirs) and float(np.min(dirs @ cmin)) < -_FEAS_TOL:
        return LPSolution(
            status=STATUS_UNBOUNDED,
            x=None,
            objective=None,
            iterations=0,
            info=_info(STATUS_UNBOUNDED, started),
        )

    pool = vertices if len(vertices) else boxed
    best = int(np.argmin(pool @ cmin))
    x = pool[best]
    return LPSolution(
        status=STATUS_OPTIMAL,
        x=x,
        objective=float(p.c @ x),
        iterations=0,
        info=_info(STATUS_OPTIMAL, started),
    )


def _info(status: str, started: float) -> dict:
    return {
        "status": status,
        "iterations": 0,
        "time": round(time.monotonic() - started, 6),
    }
