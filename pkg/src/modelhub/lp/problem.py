"""Linear program data types for the native compute kernel."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

MINIMIZE = "minimize"
MAXIMIZE = "maximize"

LEQ = "<="
GEQ = ">="
EQ = "="

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNBOUNDED = "unbounded"
STATUS_ITERATION_LIMIT = "iteration_limit"


@dataclass
class Row:
    """One linear constraint: a . x  (rel)  b."""

    a: np.ndarray
    rel: str
    b: float

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        self.b = float(self.b)
        if self.rel not in (LEQ, GEQ, EQ):
            raise ValueError(f"unknown relation {self.rel!r}")


@dataclass
class LPProblem:
    """min or max of c.x subject to rows and per-variable bounds.

    Treated as immutable once built; solves never mutate it.
    """

    n: int
    sense: str
    c: np.ndarray
    rows: list[Row] = field(default_factory=list)
    bounds: list[tuple[Optional[float], Optional[float]]] = field(default_factory=list)
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("problem needs at least one variable")
        if self.sense not in (MINIMIZE, MAXIMIZE):
            raise ValueError(f"unknown sense {self.sense!r}")
        self.c = np.asarray(self.c, dtype=float)
        if self.c.shape != (self.n,):
            raise ValueError(f"objective has {self.c.shape} coefficients, expected {self.n}")
        for r in self.rows:
            if r.a.shape != (self.n,):
                raise ValueError("constraint row length does not match variable count")
        if not self.bounds:
            self.bounds = [(None, None)] * self.n
        if len(self.bounds) != self.n:
            raise ValueError("bounds length does not match variable count")
        for lo, hi in self.bounds:
            if lo is not None and hi is not None and lo > hi:
                raise ValueError(f"lower bound {lo} exceeds upper bound {hi}")
        if not self.names:
            self.names = [f"x[{j}]" for j in range(self.n)]

    @property
    def m(self) -> int:
        return len(self.rows)

    def bound_count(self) -> int:
        return sum((lo is not None) + (hi is not None) for lo, hi in self.bounds)

    def residuals_ok(self, x: np.ndarray, tol: float) -> bool:
        """True when every row and bound holds at x within tol."""
        for r in self.rows:
            v = float(r.a @ x)
            if r.rel == LEQ and v > r.b + tol:
                return False
            if r.rel == GEQ and v < r.b - tol:
                return False
            if r.rel == EQ and abs(v - r.b) > tol:
                return False
        for j, (lo, hi) in enumerate(self.bounds):
            if lo is not None and x[j] < lo - tol:
                return False
            if hi is not None and x[j] > hi + tol:
                return False
        return True


@dataclass(frozen=True)
class SolveParams:
    feastol: float = 1e-8
    maxiter: int = 100

    def __post_init__(self):
        if not self.feastol > 0:
            raise ValueError("feastol must be positive")
        if int(self.maxiter) < 1:
            raise ValueError("maxiter must be at least 1")


@dataclass
class LPSolution:
    status: str
    x: Optional[np.ndarray]
    objective: Optional[float]
    iterations: int
    info: dict

    def __post_init__(self):
        present = self.x is not None and self.objective is not None
        if (self.status == STATUS_OPTIMAL) != present:
            raise ValueError("x and objective must be present iff status is optimal")
