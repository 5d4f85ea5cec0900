"""Seeded trial functions for the empirical ratio experiments.

Every trial is drawn in coordinates relative to the torus side ``L`` and the
horizon ``T``, so one seed gives the same continuum function on any grid and
on any parabolically rescaled copy of a grid.
"""

from __future__ import annotations

from typing import Iterator

import numpy as np
from numpy.typing import NDArray

from .grid import ParabolicBall, SpaceTimeGrid

SPIKE, TRIG, BALL = "spike", "trig", "ball"
KINDS = (SPIKE, TRIG, BALL)


def _cell_of(grid: SpaceTimeGrid, frac) -> tuple[int, ...]:
    return tuple(int(round(u * grid.N)) % grid.N for u in frac)


def spike(grid: SpaceTimeGrid, frac) -> NDArray:
    """Unit-mass spike in the cell nearest to ``-L/2 + frac*L``."""
    f = np.zeros(grid.slice_shape)
    f[_cell_of(grid, frac)] = 1.0 / grid.cell_volume
    return f


def trig(grid: SpaceTimeGrid, modes: NDArray, amps: NDArray, phases: NDArray) -> NDArray:
    """Nonnegative trigonometric polynomial ``sum(a) + sum a cos(2 pi m.x/L + phi)``."""
    xs = grid.coords()
    g = np.full(grid.slice_shape, float(np.sum(amps)))
    for m, a, ph in zip(modes, amps, phases):
        arg = sum(mi * xi for mi, xi in zip(m, xs)) * (2 * np.pi / grid.L) + ph
        g += a * np.cos(arg)
    return np.maximum(g, 0.0)


def disc(grid: SpaceTimeGrid, center_frac, radius_frac: float) -> NDArray:
    xs = grid.coords()
    c = [-0.5 * grid.L + u * grid.L for u in center_frac]
    d2 = sum((x - ci) ** 2 for x, ci in zip(xs, c))
    return (d2 < (radius_frac * grid.L) ** 2).astype(float)


def _draw_trig(rng, n):
    k = 4
    modes = rng.integers(-4, 5, size=(k, n))
    modes[np.all(modes == 0, axis=1), 0] = 1
    return modes, rng.uniform(0, 1, k), rng.uniform(0, 2 * np.pi, k)


def spatial_family(grid: SpaceTimeGrid, count: int, seed: int) -> Iterator[tuple[str, NDArray]]:
    """``count`` slices cycling through spikes, trig polynomials and discs."""
    rng = np.random.default_rng(seed)
    n = grid.n
    for i in range(count):
        kind = KINDS[i % 3]
        if kind == SPIKE:
            yield f"{SPIKE}-{i}", spike(grid, rng.uniform(0.25, 0.75, n))
        elif kind == TRIG:
            yield f"{TRIG}-{i}", trig(grid, *_draw_trig(rng, n))
        else:
            c = rng.uniform(0.3, 0.7, n)
            yield f"{BALL}-{i}", disc(grid, c, rng.uniform(1 / 64, 1 / 8))


def parabolic_ball_indicator(grid: SpaceTimeGrid, ball: ParabolicBall) -> NDArray:
    """Indicator of ``ball`` at grid points, silently clipped to the grid."""
    xs = np.stack(grid.coords(), axis=-1)
    t = grid.t.reshape((-1,) + (1,) * grid.n)
    return ball.contains(t, xs[None]).astype(float)


def spacetime_family(grid: SpaceTimeGrid, alpha: float, count: int, seed: int) -> Iterator[tuple[str, NDArray]]:
    """Space-time trials: spikes and trig polynomials on random time windows, and parabolic balls."""
    rng = np.random.default_rng(seed)
    n = grid.n
    tshape = (-1,) + (1,) * n
    for i in range(count):
        kind = KINDS[i % 3]
        a = rng.uniform(0.0, 0.5)
        b = rng.uniform(a + 0.1, 1.0)
        window = ((grid.t >= a * grid.T) & (grid.t <= b * grid.T)).astype(float).reshape(tshape)
        if kind == SPIKE:
            yield f"{SPIKE}-{i}", window * spike(grid, rng.uniform(0.25, 0.75, n))[None]
        elif kind == TRIG:
            yield f"{TRIG}-{i}", window * trig(grid, *_draw_trig(rng, n))[None]
        else:
            c = rng.uniform(0.3, 0.7, n)
            x0 = tuple(-0.5 * grid.L + u * grid.L for u in c)
            t0 = rng.uniform(0.2, 0.8) * grid.T
            r = rng.uniform(1 / 64, 1 / 8) * grid.L
            yield f"{BALL}-{i}", parabolic_ball_indicator(grid, ParabolicBall(t0, x0, r, alpha))
