"""Discrete ``(alpha, p, q)``-capacity: sets, operator, solvers and experiments."""

from .operator import BudgetExceeded, ConstraintOperator, materialize_operator
from .sets import CompactSet, DiscreteMeasure
from .solvers import (
    BoundResult,
    CapacityResult,
    SolverConfig,
    capacity_bracket,
    dual_capacity,
    primal_capacity,
)

__all__ = [
    "BudgetExceeded",
    "ConstraintOperator",
    "materialize_operator",
    "CompactSet",
    "DiscreteMeasure",
    "BoundResult",
    "CapacityResult",
    "SolverConfig",
    "capacity_bracket",
    "dual_capacity",
    "primal_capacity",
]
