"""The constraint map ``F -> (S_alpha F)|_K`` and its adjoint."""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from ..evolve import SemigroupPlan
from .sets import CompactSet

__all__ = ["ConstraintOperator", "materialize_operator", "BudgetExceeded", "DEFAULT_BUDGET"]

DEFAULT_BUDGET = 4_000_000


class BudgetExceeded(ValueError):
    pass


class ConstraintOperator:
    """``A F = (S F)`` sampled at the points of ``K``.

    The primal space carries the quadrature inner product
    ``<F, G>_W = sum W F G`` with ``W = omega_k dx^n``; the constraint space
    is plain ``R^|K|`` (point masses).  :meth:`adjoint` is the adjoint for
    that pair, so ``adjoint(mu) = S*(mu / W)``.  :meth:`rmatvec` is the
    Euclidean transpose used when the operator is handled as a matrix.
    """

    def __init__(self, plan: SemigroupPlan, kset: CompactSet, matrix: NDArray | None = None):
        if kset.grid != plan.grid:
            raise ValueError("set and plan live on different grids")
        self.plan = plan
        self.set = kset
        self.matrix = matrix
        g = plan.grid
        self.weights = g.time_weights.reshape((-1,) + (1,) * g.n) * g.cell_volume * np.ones(g.shape)

    @property
    def grid(self):
        return self.plan.grid

    @property
    def shape(self) -> tuple[int, int]:
        return self.set.count, int(np.prod(self.grid.shape))

    def forward(self, F: NDArray) -> NDArray:
        if self.matrix is not None:
            return self.matrix @ F.ravel()
        return self.plan.forward(F)[self.set.mask]

    def adjoint(self, mu: NDArray) -> NDArray:
        if self.matrix is not None:
            return (self.matrix.T @ mu).reshape(self.grid.shape) / self.weights
        G = np.zeros(self.grid.shape)
        G[self.set.mask] = mu
        return self.plan.adjoint(G / self.weights)

    def rmatvec(self, y: NDArray) -> NDArray:
        """Euclidean transpose ``A^T y`` as a flat vector."""
        return (self.weights * self.adjoint(y)).ravel()

    def inner(self, F: NDArray, G: NDArray) -> float:
        return float(np.sum(self.weights * F * G))

    def norm_estimate(self, iters: int = 60, seed: int = 0) -> float:
        """Power iteration for the operator norm from ``(., .)_W`` to ``R^|K|``."""
        if self.set.is_empty:
            return 0.0
        rng = np.random.default_rng(seed)
        F = np.abs(rng.standard_normal(self.grid.shape))
        est = 0.0
        for _ in range(iters):
            F = F / np.sqrt(self.inner(F, F))
            AF = self.forward(F)
            est_new = float(np.sqrt(AF @ AF))
            F = self.adjoint(AF)
            if est and abs(est_new - est) <= 1e-10 * est_new:
                est = est_new
                break
            est = est_new
        return est


def materialize_operator(
    plan: SemigroupPlan,
    kset: CompactSet,
    budget: int = DEFAULT_BUDGET,
    matrix_free: bool = False,
    force: bool = False,
) -> ConstraintOperator:
    """Build the constraint operator, as a dense ``|K| x |grid|`` matrix when it fits.

    Rows are computed from adjoint sweeps of unit masses, so the matrix and
    the matrix-free actions agree to rounding.  When ``|K| * |grid|``
    exceeds ``budget`` the operator is returned matrix-free if
    ``matrix_free`` is set, otherwise :class:`BudgetExceeded` is raised.
    ``force`` materializes regardless of the budget.
    """
    op = ConstraintOperator(plan, kset)
    rows, cols = op.shape
    if not force and rows * cols > budget:
        if matrix_free:
            return op
        raise BudgetExceeded(f"|K| x |grid| = {rows} x {cols} exceeds the budget {budget}")
    A = np.empty((rows, cols))
    e = np.zeros(rows)
    for i in range(rows):
        e[i] = 1.0
        A[i] = op.rmatvec(e)
        e[i] = 0.0
    return ConstraintOperator(plan, kset, A)
