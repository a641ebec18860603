"""Built-in linear programming compute kernel."""

from .problem import (  # noqa: F401
    EQ,
    GEQ,
    LEQ,
    MAXIMIZE,
    MINIMIZE,
    STATUS_INFEASIBLE,
    STATUS_ITERATION_LIMIT,
    STATUS_OPTIMAL,
    STATUS_UNBOUNDED,
    LPProblem,
    LPSolution,
    Row,
    SolveParams,
)
from .simplex import solve  # noqa: F401
from .oracle import InstanceTooLarge, oracle_solve  # noqa: F401

KERNEL_TAG = "native-lp"
SCRIPT_EXTENSION = ".mhl"
