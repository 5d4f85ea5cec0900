"""Space-time discretization: a periodic spatial torus times a uniform time axis.

The torus ``[-L/2, L/2)^n`` stands in for ``R^n``.  Spatial quadrature is the
rectangle rule (weight ``dx**n`` per cell, exact for band-limited periodic
functions) and time quadrature is the composite trapezoid rule on
``t_k = k*dt``, ``k = 0..M``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "SpaceTimeGrid",
    "Field",
    "ParabolicBall",
    "make_grid",
    "ball_mask",
    "integrate",
    "integrate_slice",
    "trapezoid_weights",
]

FULL = "space-time"
SLICE = "slice"


def trapezoid_weights(M: int, dt: float) -> NDArray:
    """Composite trapezoid weights for ``M + 1`` equispaced samples."""
    w = np.full(M + 1, dt)
    w[0] = w[-1] = 0.5 * dt
    return w


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Uniform periodic spatial grid times a uniform time grid.

    Attributes
    ----------
    n : int
        Spatial dimension, 1 or 2.
    L : float
        Side of the torus ``[-L/2, L/2)^n``.
    N : int
        Points per spatial axis (even, at least 8).
    T : float
        Time horizon; samples ``t_k = k*T/M``.
    M : int
        Number of time steps (at least 2).
    """

    n: int
    L: float
    N: int
    T: float
    M: int

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"n must be 1 or 2, got {self.n}")
        if int(self.N) != self.N or self.N < 8 or self.N % 2:
            raise ValueError(f"N must be an even integer >= 8, got {self.N}")
        if int(self.M) != self.M or self.M < 2:
            raise ValueError(f"M must be an integer >= 2, got {self.M}")
        if not (np.isfinite(self.L) and self.L > 0):
            raise ValueError(f"L must be positive, got {self.L}")
        if not (np.isfinite(self.T) and self.T > 0):
            raise ValueError(f"T must be positive, got {self.T}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "T", float(self.T))

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def dt(self) -> float:
        return self.T / self.M

    @property
    def cell_volume(self) -> float:
        return self.dx**self.n

    @property
    def slice_shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.M + 1,) + self.slice_shape

    @cached_property
    def x(self) -> NDArray:
        """1-D spatial sample points ``-L/2 + j*dx``."""
        return -0.5 * self.L + self.dx * np.arange(self.N)

    @cached_property
    def t(self) -> NDArray:
        return self.dt * np.arange(self.M + 1)

    @cached_property
    def time_weights(self) -> NDArray:
        return trapezoid_weights(self.M, self.dt)

    @cached_property
    def radius(self) -> NDArray:
        """Euclidean norm ``|x|`` over the spatial grid."""
        axes = np.meshgrid(*([self.x] * self.n), indexing="ij")
        return np.sqrt(sum(a * a for a in axes))

    def coords(self) -> list[NDArray]:
        """Spatial coordinate arrays, one per axis, broadcast to the slice shape."""
        return np.meshgrid(*([self.x] * self.n), indexing="ij")

    @cached_property
    def frequencies(self) -> NDArray:
        """Discrete Fourier frequencies ``2*pi*m/L``, ``m = -N/2 .. N/2-1``."""
        m = np.arange(-self.N // 2, self.N // 2)
        return 2.0 * np.pi * m / self.L

    @cached_property
    def rfft_abs_xi(self) -> NDArray:
        """``|xi|`` laid out like the output of ``rfftn`` over the spatial axes."""
        full = 2.0 * np.pi * np.fft.fftfreq(self.N, d=self.dx)
        half = 2.0 * np.pi * np.fft.rfftfreq(self.N, d=self.dx)
        axes = [full] * (self.n - 1) + [half]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.sqrt(sum(a * a for a in mesh))

    @property
    def xi_max(self) -> float:
        """Largest ``|xi|`` on the dual grid (corner frequency)."""
        return np.sqrt(self.n) * np.pi * self.N / self.L

    def index_of_time(self, t: float) -> int:
        k = int(round(t / self.dt))
        if not 0 <= k <= self.M or abs(k * self.dt - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"time {t} is not a grid time")
        return k

    def rescaled(self, r: float, alpha: float, *, N: int | None = None, M: int | None = None) -> SpaceTimeGrid:
        """Parabolically rescaled copy: ``L -> r*L`` and ``T -> r**(2 alpha) * T``."""
        return SpaceTimeGrid(self.n, self.L * r, N or self.N, self.T * r ** (2 * alpha), M or self.M)

    def describe(self) -> dict:
        return {"n": self.n, "L": self.L, "N": self.N, "T": self.T, "M": self.M}


def make_grid(n: int, L: float, N: int, T: float, M: int) -> SpaceTimeGrid:
    """Validated :class:`SpaceTimeGrid`; raises ``ValueError`` on bad parameters."""
    return SpaceTimeGrid(n, L, N, T, M)


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples on a grid: a full space-time array or one time slice."""

    grid: SpaceTimeGrid
    values: NDArray
    kind: str = FULL

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        expected = self.grid.shape if self.kind == FULL else self.grid.slice_shape
        if self.kind not in (FULL, SLICE):
            raise ValueError(f"unknown field kind {self.kind!r}")
        if v.shape != expected:
            raise ValueError(f"{self.kind} field on this grid needs shape {expected}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def is_slice(self) -> bool:
        return self.kind == SLICE

    @classmethod
    def zeros(cls, grid: SpaceTimeGrid, kind: str = FULL) -> Field:
        shape = grid.shape if kind == FULL else grid.slice_shape
        return cls(grid, np.zeros(shape), kind)

    def slice(self, k: int) -> Field:
        if self.is_slice:
            raise ValueError("field is already a time slice")
        return Field(self.grid, self.values[k], SLICE)

    def with_values(self, values: NDArray) -> Field:
        return Field(self.grid, values, self.kind)

    def __add__(self, other: Field) -> Field:
        _check_same(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: Field) -> Field:
        _check_same(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c: float) -> Field:
        return self.with_values(c * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> Field:
        return self.with_values(-self.values)

    def __abs__(self) -> Field:
        return self.with_values(np.abs(self.values))


def _check_same(a: Field, b: Field) -> None:
    if a.grid != b.grid or a.kind != b.kind:
        raise ValueError("fields live on different grids or have different kinds")


@dataclass(frozen=True)
class ParabolicBall:
    """``{(t, x): |t - t0| < r**(2 alpha), |x - x0| < r}``, intersected with ``t >= 0``."""

    t0: float
    x0: tuple[float, ...]
    r: float
    alpha: float

    def __post_init__(self):
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        object.__setattr__(self, "x0", tuple(float(v) for v in x0))
        if not self.r > 0:
            raise ValueError(f"ball radius must be positive, got {self.r}")
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")

    @property
    def n(self) -> int:
        return len(self.x0)

    @property
    def half_height(self) -> float:
        return self.r ** (2 * self.alpha)

    def contains(self, t, x) -> NDArray:
        """Membership predicate; ``x`` has its spatial components on the last axis."""
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        d = np.sqrt(np.sum((x - np.asarray(self.x0)) ** 2, axis=-1))
        return (np.abs(t - self.t0) < self.half_height) & (d < self.r) & (t >= 0)

    def bounding_box(self) -> tuple[tuple[float, float], ...]:
        """``((t_lo, t_hi), (x1_lo, x1_hi), ...)`` with the time range clipped at 0."""
        h = self.half_height
        box = [(max(0.0, self.t0 - h), self.t0 + h)]
        box += [(c - self.r, c + self.r) for c in self.x0]
        return tuple(box)


def ball_mask(grid: SpaceTimeGrid, ball: ParabolicBall) -> Field:
    """Indicator of ``ball`` sampled at the grid points.

    Raises ``ValueError`` when the ball's bounding box reaches more than one
    cell beyond the sampled hull (time above ``T``, or space outside the
    torus), since the mask would then be silently truncated or wrapped.
    """
    if ball.n != grid.n:
        raise ValueError(f"ball lives in dimension {ball.n}, grid in {grid.n}")
    (t_lo, t_hi), *xbox = ball.bounding_box()
    if t_hi > grid.T + grid.dt:
        raise ValueError(f"ball reaches t={t_hi:g}, beyond the horizon T={grid.T:g}")
    lo, hi = grid.x[0] - grid.dx, grid.x[-1] + grid.dx
    for a, b in xbox:
        if a < lo or b > hi:
            raise ValueError(f"ball spans [{a:g}, {b:g}] outside the torus [{grid.x[0]:g}, {grid.x[-1]:g}]")
    in_time = (np.abs(grid.t - ball.t0) < ball.half_height) & (grid.t >= 0)
    d2 = sum((c - x0) ** 2 for c, x0 in zip(grid.coords(), ball.x0))
    in_space = d2 < ball.r**2
    mask = in_time.reshape((-1,) + (1,) * grid.n) & in_space[None]
    return Field(grid, mask.astype(float))


def integrate(field: Field) -> float:
    """Space-time quadrature (trapezoid in time, rectangle rule in space)."""
    if field.is_slice:
        return integrate_slice(field)
    g = field.grid
    per_slice = field.values.reshape(g.M + 1, -1).sum(axis=1) * g.cell_volume
    return float(np.dot(g.time_weights, per_slice))


def integrate_slice(field: Field, k: int | None = None) -> float:
    """Spatial integral of a slice field, or of time slice ``k`` of a full field."""
    v = field.values if field.is_slice else field.values[k if k is not None else _missing_k()]
    return float(v.sum() * field.grid.cell_volume)


def _missing_k():
    raise ValueError("a time index is required for a space-time field")
