"""Compact grid sets and nonnegative point measures on them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from ..grid import Field, ParabolicBall, SpaceTimeGrid, ball_mask

__all__ = ["CompactSet", "DiscreteMeasure"]


@dataclass(frozen=True, eq=False)
class CompactSet:
    """A set of space-time grid points, never including ``t = 0``.

    ``mask`` is a boolean array of shape ``grid.shape``; ``descriptor`` is a
    JSON-friendly description used in reports.
    """

    grid: SpaceTimeGrid
    mask: NDArray
    descriptor: dict = field(default_factory=dict)

    def __post_init__(self):
        m = np.array(self.mask, dtype=bool)
        if m.shape != self.grid.shape:
            raise ValueError(f"mask needs shape {self.grid.shape}, got {m.shape}")
        if m[0].any():
            raise ValueError("a compact set must lie in t > 0 (slice 0 is excluded)")
        m.flags.writeable = False
        object.__setattr__(self, "mask", m)

    # -- constructors ---------------------------------------------------

    @classmethod
    def empty(cls, grid: SpaceTimeGrid) -> CompactSet:
        return cls(grid, np.zeros(grid.shape, dtype=bool), {"kind": "empty"})

    @classmethod
    def from_ball(cls, grid: SpaceTimeGrid, ball: ParabolicBall) -> CompactSet:
        """Grid points of a parabolic ball, with any ``t = 0`` points dropped."""
        m = ball_mask(grid, ball).values > 0
        m[0] = False
        desc = {"kind": "ball", "t0": ball.t0, "x0": list(ball.x0), "r": ball.r, "alpha": ball.alpha}
        return cls(grid, m, desc)

    @classmethod
    def from_box(cls, grid: SpaceTimeGrid, t_range, x_ranges) -> CompactSet:
        """Product of a time interval and a spatial box, closed intervals, ``t > 0``."""
        t_lo, t_hi = t_range
        eps = 1e-9 * max(grid.dt, grid.dx)
        in_t = (grid.t >= t_lo - eps) & (grid.t <= t_hi + eps) & (grid.t > 0)
        if len(x_ranges) != grid.n:
            raise ValueError(f"need {grid.n} spatial ranges")
        in_x = np.ones(grid.slice_shape, dtype=bool)
        for c, (a, b) in zip(grid.coords(), x_ranges):
            in_x &= (c >= a - eps) & (c <= b + eps)
        m = in_t.reshape((-1,) + (1,) * grid.n) & in_x[None]
        desc = {"kind": "box", "t_range": list(t_range), "x_ranges": [list(r) for r in x_ranges]}
        return cls(grid, m, desc)

    @classmethod
    def singleton(cls, grid: SpaceTimeGrid, k: int, index) -> CompactSet:
        m = np.zeros(grid.shape, dtype=bool)
        index = tuple(np.atleast_1d(index).tolist())
        m[(k, *index)] = True
        return cls(grid, m, {"kind": "point", "k": k, "index": list(index)})

    # -- queries and set algebra ----------------------------------------

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    @property
    def is_empty(self) -> bool:
        return self.count == 0

    def bounding_box(self) -> tuple[tuple[int, int], ...] | None:
        """Inclusive index ranges per axis, or ``None`` for the empty set."""
        if self.is_empty:
            return None
        idx = np.nonzero(self.mask)
        return tuple((int(i.min()), int(i.max())) for i in idx)

    @property
    def last_time_index(self) -> int:
        box = self.bounding_box()
        return 0 if box is None else box[0][1]

    def _same_grid(self, other: CompactSet) -> None:
        if other.grid != self.grid:
            raise ValueError("sets live on different grids")

    def union(self, other: CompactSet) -> CompactSet:
        self._same_grid(other)
        desc = {"kind": "union", "parts": [self.descriptor, other.descriptor]}
        alphas = {d.get("alpha") for d in desc["parts"]}
        if len(alphas) == 1 and None not in alphas:
            desc["alpha"] = alphas.pop()
        return CompactSet(self.grid, self.mask | other.mask, desc)

    def issubset(self, other: CompactSet) -> bool:
        self._same_grid(other)
        return bool(np.all(other.mask[self.mask]))

    def translate(self, cells) -> CompactSet:
        """Periodic spatial shift by whole cells."""
        cells = tuple(np.atleast_1d(cells).tolist())
        if len(cells) != self.grid.n:
            raise ValueError(f"need {self.grid.n} cell offsets")
        m = np.roll(self.mask, cells, axis=tuple(range(1, self.grid.n + 1)))
        return CompactSet(self.grid, m, {"kind": "translate", "cells": list(cells), "of": self.descriptor})

    def as_field(self) -> Field:
        return Field(self.grid, self.mask.astype(float))


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Point masses at the grid points of a set; ``weights`` lists them in mask order."""

    set: CompactSet
    weights: NDArray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        if w.shape != (self.set.count,):
            raise ValueError(f"need {self.set.count} weights, got {w.shape}")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def grid(self) -> SpaceTimeGrid:
        return self.set.grid

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def dense(self) -> NDArray:
        """Weights scattered onto the full grid."""
        out = np.zeros(self.grid.shape)
        out[self.set.mask] = self.weights
        return out
