"""Fractional dissipative potentials on periodic grids.

Spectral kernels and semigroups, Duhamel potentials and their adjoints,
mixed-norm estimates, capacity brackets from primal and dual solvers, and
parabolic Hausdorff content.
"""

from .evolve import SemigroupPlan, make_plan
from .grid import Field, ParabolicBall, SpaceTimeGrid, make_grid

__all__ = ["Field", "ParabolicBall", "SpaceTimeGrid", "SemigroupPlan", "make_grid", "make_plan"]
__version__ = "0.1.0"
