"""Semigroup, Duhamel potential and its adjoint on a periodic space-time grid.

All spatial operators act spectrally.  The Duhamel integral uses the
composite trapezoid rule on the grid's time samples, and the adjoint is
built from the very same weights so that

    <S F, G> == <F, S* G>

holds to rounding error under the grid's space-time quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.typing import NDArray

from . import _fft
from .grid import FULL, SLICE, Field, SpaceTimeGrid

__all__ = [
    "SemigroupPlan",
    "make_plan",
    "apply_semigroup",
    "apply_fractional_laplacian_semigroup",
    "duhamel",
    "duhamel_all",
    "adjoint_duhamel",
    "adjoint_duhamel_all",
]


@dataclass(frozen=True, eq=False)
class SemigroupPlan:
    """Multiplier tables for one grid and one order ``alpha``."""

    grid: SpaceTimeGrid
    alpha: float

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")

    @cached_property
    def symbol(self) -> NDArray:
        """``|xi|^(2 alpha)`` in ``rfftn`` layout."""
        s = self.grid.rfft_abs_xi ** (2 * self.alpha)
        s.flags.writeable = False
        return s

    @cached_property
    def step(self) -> NDArray:
        """One-step multiplier ``exp(-dt |xi|^(2 alpha))``."""
        e = np.exp(-self.grid.dt * self.symbol)
        e.flags.writeable = False
        return e

    def multiplier(self, t: float) -> NDArray:
        return np.exp(-t * self.symbol)

    @property
    def _axes(self) -> tuple[int, ...]:
        return tuple(range(-self.grid.n, 0))

    def _fwd(self, a: NDArray) -> NDArray:
        return _fft.rfftn(a, axes=self._axes)

    def _inv(self, a: NDArray) -> NDArray:
        return _fft.irfftn(a, s=self.grid.slice_shape, axes=self._axes)

    # -- raw array kernels used by the capacity solvers -----------------

    def forward(self, F: NDArray) -> NDArray:
        """``S F`` at every grid time, for an array of shape ``grid.shape``."""
        g = self.grid
        dt, e1 = g.dt, self.step
        Fh = self._fwd(F)
        out = np.empty_like(Fh)
        out[0] = 0.0
        acc = Fh[0].copy()  # sum_j E((k-j)dt) F_j
        head = Fh[0].copy()  # E(k dt) F_0
        for k in range(1, g.M + 1):
            acc *= e1
            acc += Fh[k]
            head *= e1
            out[k] = dt * acc - 0.5 * dt * (head + Fh[k])
        return self._inv(out)

    def adjoint(self, G: NDArray) -> NDArray:
        """``S* G`` at every grid time (the quadrature adjoint of :meth:`forward`)."""
        g = self.grid
        dt, e1, w = g.dt, self.step, g.time_weights
        Hh = self._fwd(G * w.reshape((-1,) + (1,) * g.n))
        out = np.empty_like(Hh)
        acc = np.zeros_like(Hh[0])  # sum_{k>=j} E((k-j)dt) w_k G_k
        for j in range(g.M, 0, -1):
            acc *= e1
            acc += Hh[j]
            out[j] = (dt * acc - 0.5 * dt * Hh[j]) / w[j]
        acc *= e1
        acc += Hh[0]
        out[0] = acc - Hh[0]
        return self._inv(out)


def make_plan(grid: SpaceTimeGrid, alpha: float) -> SemigroupPlan:
    return SemigroupPlan(grid, alpha)


def _check(plan: SemigroupPlan, f: Field, kind: str) -> None:
    if f.grid != plan.grid:
        raise ValueError("field and plan live on different grids")
    if f.kind != kind:
        raise ValueError(f"expected a {kind} field, got {f.kind}")


def apply_semigroup(plan: SemigroupPlan, f: Field, t: float) -> Field:
    """``exp(-t(-Delta)^alpha) f`` for a slice ``f``; identity at ``t = 0``."""
    _check(plan, f, SLICE)
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return f
    return Field(plan.grid, plan._inv(plan._fwd(f.values) * plan.multiplier(t)), SLICE)


def apply_fractional_laplacian_semigroup(plan: SemigroupPlan, f: Field, t: float) -> Field:
    """``(-Delta)^alpha exp(-t(-Delta)^alpha) f`` for ``t > 0``."""
    _check(plan, f, SLICE)
    if t <= 0:
        raise ValueError("t must be positive (the operator is unbounded at t = 0)")
    mult = plan.symbol * plan.multiplier(t)
    return Field(plan.grid, plan._inv(plan._fwd(f.values) * mult), SLICE)


def _check_k(plan: SemigroupPlan, k: int) -> int:
    k = int(k)
    if not 0 <= k <= plan.grid.M:
        raise ValueError(f"time index {k} outside 0..{plan.grid.M}")
    return k


def duhamel(plan: SemigroupPlan, F: Field, k: int) -> Field:
    """``S F(t_k)`` by direct trapezoid summation over ``s = t_0 .. t_k``.

    This sums the terms one by one and is independent of the recursion in
    :func:`duhamel_all`.
    """
    _check(plan, F, FULL)
    k = _check_k(plan, k)
    g = plan.grid
    if k == 0:
        return Field.zeros(g, SLICE)
    acc = np.zeros(plan.symbol.shape, dtype=complex)
    for j in range(k + 1):
        wj = 0.5 * g.dt if j in (0, k) else g.dt
        acc += wj * plan.multiplier((k - j) * g.dt) * plan._fwd(F.values[j])
    return Field(g, plan._inv(acc), SLICE)


def adjoint_duhamel(plan: SemigroupPlan, G: Field, k: int) -> Field:
    """``S* G(t_k)``: the forward-in-time potential truncated at the horizon ``T``.

    Direct summation with the weights induced by :func:`duhamel` under the
    trapezoid inner product.
    """
    _check(plan, G, FULL)
    j = _check_k(plan, k)
    g = plan.grid
    w = g.time_weights
    acc = np.zeros(plan.symbol.shape, dtype=complex)
    for kk in range(max(j, 1), g.M + 1):
        wkj = 0.5 * g.dt if j in (0, kk) else g.dt
        acc += (w[kk] * wkj / w[j]) * plan.multiplier((kk - j) * g.dt) * plan._fwd(G.values[kk])
    return Field(g, plan._inv(acc), SLICE)


def duhamel_all(plan: SemigroupPlan, F: Field) -> Field:
    """``S F`` at every grid time (one sweep in Fourier space)."""
    _check(plan, F, FULL)
    return Field(plan.grid, plan.forward(F.values), FULL)


def adjoint_duhamel_all(plan: SemigroupPlan, G: Field) -> Field:
    """``S* G`` at every grid time (one backward sweep in Fourier space)."""
    _check(plan, G, FULL)
    return Field(plan.grid, plan.adjoint(G.values), FULL)
