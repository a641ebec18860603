"""Two-phase dense simplex with Bland's rule.

Phase 1 minimizes the sum of artificial variables to find a basic feasible
point (infeasible when its optimum exceeds feastol); phase 2 optimizes the
real objective. Unboundedness shows up as a cost-improving column with no
positive ratio. Bland's rule (lowest index enters, lowest basic index breaks
ratio ties) prevents cycling; total pivots are capped by maxiter.
"""

from __future__ import annotations

import time

import numpy as np

from .problem import (
    EQ,
    GEQ,
    LEQ,
    MAXIMIZE,
    STATUS_INFEASIBLE,
    STATUS_ITERATION_LIMIT,
    STATUS_OPTIMAL,
    STATUS_UNBOUNDED,
    LPProblem,
    LPSolution,
    SolveParams,
)

_PIVOT_EPS = 1e-9


class _IterationLimit(Exception):
    pass


class _Tableau:
    def __init__(self, T: np.ndarray, basis: list[int], maxiter: int):
        self.T = T
        self.basis = basis
        self.pivots = 0
        self.maxiter = maxiter

    def pivot(self, row: int, col: int):
        if self.pivots >= self.maxiter:
            raise _IterationLimit()
        T = self.T
        T[row] /= T[row, col]
        factors = T[:, col].copy()
        factors[row] = 0.0
        T -= np.outer(factors, T[row])
        self.basis[row] = col
        self.pivots += 1

    def run(self, allowed: np.ndarray) -> str:
        """Pivot until optimal or unbounded. allowed masks enterable columns."""
        T = self.T
        m = T.shape[0] - 1
        while True:
            costs = T[-1, :-1]
            candidates = np.nonzero(allowed & (costs < -_PIVOT_EPS))[0]
            if candidates.size == 0:
                return "optimal"
            col = int(candidates[0])  # Bland: lowest index enters
            ratios = []
            for i in range(m):
                a = T[i, col]
                if a > _PIVOT_EPS:
                    ratios.append((T[i, -1] / a, self.basis[i], i))
            if not ratios:
                return "unbounded"
            # Bland: smallest ratio, ties broken by smallest basic variable index
            _, _, row = min(ratios)
            self.pivot(row, col)


def _to_nonnegative_form(p: LPProblem):
    """Rewrite x = S y + t with y >= 0; returns (S, t, extra upper-bound rows)."""
    cols: list[tuple[int, float]] = []  # per y column: (x index, sign)
    shift = np.zeros(p.n)
    upper_rows: list[tuple[int, float]] = []  # (y column, rhs) for y_k <= rhs
    for j, (lo, hi) in enumerate(p.bounds):
        if lo is not None:
            shift[j] = lo
            cols.append((j, 1.0))
            if hi is not None:
                upper_rows.append((len(cols) - 1, hi - lo))
        elif hi is not None:
            shift[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    N = len(cols)
    S = np.zeros((p.n, N))
    for k, (j, sign) in enumerate(cols):
        S[j, k] = sign
    return S, shift, upper_rows


def solve(p: LPProblem, params: SolveParams = SolveParams()) -> LPSolution:
    """Solve an LP, returning status, optimal point, objective, and metadata."""
    started = time.monotonic()
    S, shift, upper_rows = _to_nonnegative_form(p)
    N = S.shape[1]

    A_parts = []
    b_parts = []
    rels = []
    for r in p.rows:
        A_parts.append(r.a @ S)
        b_parts.append(r.b - float(r.a @ shift))
        rels.append(r.rel)
    for k, rhs in upper_rows:
        row = np.zeros(N)
        row[k] = 1.0
        A_parts.append(row)
        b_parts.append(rhs)
        rels.append(LEQ)

    m = len(A_parts)
    A = np.array(A_parts) if m else np.zeros((0, N))
    b = np.array(b_parts) if m else np.zeros(0)

    # Normalize to b >= 0 so slacks/artificials form a starting basis.
    for i in range(m):
        if b[i] < 0:
            A[i] = -A[i]
            b[i] = -b[i]
            if rels[i] == LEQ:
                rels[i] = GEQ
            elif rels[i] == GEQ:
                rels[i] = LEQ

    n_slack = sum(1 for r in rels if r == LEQ)
    n_surplus = sum(1 for r in rels if r == GEQ)
    n_art = sum(1 for r in rels if r in (GEQ, EQ))
    slack0, surplus0, art0 = N, N + n_slack, N + n_slack + n_surplus
    total = N + n_slack + n_surplus + n_art

    T = np.zeros((m + 1, total + 1))
    basis: list[int] = []
    si = ui = ai = 0
    for i in range(m):
        T[i, :N] = A[i]
        T[i, -1] = b[i]
        if rels[i] == LEQ:
            T[i, slack0 + si] = 1.0
            basis.append(slack0 + si)
            si += 1
        else:
            if rels[i] == GEQ:
                T[i, surplus0 + ui] = -1.0
                ui += 1
            T[i, art0 + ai] = 1.0
            basis.append(art0 + ai)
            ai += 1

    tab = _Tableau(T, basis, int(params.maxiter))

    def objective_row(costs: np.ndarray):
        row = np.zeros(total + 1)
        row[:total] = costs
        for i, bj in enumerate(tab.basis):
            if costs[bj] != 0.0:
                row -= costs[bj] * T[i]
        T[-1] = row

    def limit_solution() -> LPSolution:
        return LPSolution(
            status=STATUS_ITERATION_LIMIT,
            x=None,
            objective=None,
            iterations=tab.pivots,
            info=_info(STATUS_ITERATION_LIMIT, tab.pivots, started),
        )

    # Phase 1: minimize artificial sum.
    if n_art:
        c1 = np.zeros(total)
        c1[art0:] = 1.0
        objective_row(c1)
        allowed = np.ones(total, dtype=bool)
        try:
            outcome = tab.run(allowed)
        except _IterationLimit:
            return limit_solution()
        if outcome != "optimal":  # cannot happen: phase-1 objective is bounded below
            raise ArithmeticError("phase 1 reported unbounded")
        if -T[-1, -1] > params.feastol:
            return LPSolution(
                status=STATUS_INFEASIBLE,
                x=None,
                objective=None,
                iterations=tab.pivots,
                info=_info(STATUS_INFEASIBLE, tab.pivots, started),
            )
        # Drive remaining artificials out of the basis where possible.
        for i in range(m):
            if tab.basis[i] >= art0:
                cands = np.nonzero(np.abs(T[i, :art0]) > _PIVOT_EPS)[0]
                if cands.size:
                    try:
                        tab.pivot(i, int(cands[0]))
                    except _IterationLimit:
                        return limit_solution()
                # else: redundant row; the artificial stays basic at zero

    # Phase 2: the real objective (internally always a minimization).
    c2 = np.zeros(total)
    cy = p.c @ S
    c2[:N] = -cy if p.sense == MAXIMIZE else cy
    objective_row(c2)
    allowed = np.ones(total, dtype=bool)
    allowed[art0:] = False
    try:
        outcome = tab.run(allowed)
    except _IterationLimit:
        return limit_solution()
    if outcome == "unbounded":
        return LPSolution(
            status=STATUS_UNBOUNDED,
            x=None,
            objective=None,
            iterations=tab.pivots,
            info=_info(STATUS_UNBOUNDED, tab.pivots, started),
        )

    y = np.zeros(total)
    for i, bj in enumerate(tab.basis):
        y[bj] = T[i, -1]
    x = S @ y[:N] + shift
    objective = float(p.c @ x)
    return LPSolution(
        status=STATUS_OPTIMAL,
        x=x,
        objective=objective,
        iterations=tab.pivots,
        info=_info(STATUS_OPTIMAL, tab.pivots, started),
    )


def _info(status: str, iterations: int, started: float) -> dict:
    return {
        "status": status,
        "iterations": iterations,
        "time": round(time.monotonic() - started, 6),
    }
