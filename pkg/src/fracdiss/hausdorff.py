"""Parabolic Hausdorff content of grid sets via explicit covers.

Covers use parabolic balls ``|t - t0| < r^{2 alpha}, |x - x0| < r``.  Three
cover families are searched and every cover is checked against the set's
grid points:

* ``single-ball``: one ball around the set's bounding box;
* ``dyadic-grid``: all tiles of one level of a grid-anchored parabolic tiling;
* ``tree``: the cheapest cover by tiles of any admissible level, computed
  exactly by dynamic programming over the nested tiling.

Tiles are nested, so the tree optimum is monotone under inclusion,
subadditive under union and non-decreasing as ``epsilon`` shrinks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .capacity.sets import CompactSet
from .grid import ParabolicBall, SpaceTimeGrid

__all__ = [
    "GaugeFn",
    "CoverResult",
    "TileLevel",
    "tile_levels",
    "hausdorff_content",
    "covers",
    "METHODS",
    "ComparisonReport",
    "comparison_experiment",
    "LogGaugeReport",
    "log_gauge_experiment",
]

SINGLE, DYADIC, TREE, BEST = "single-ball", "dyadic-grid", "tree", "best"
METHODS = (SINGLE, DYADIC, TREE, BEST)
_PAD = 1 + 1e-9


@dataclass(frozen=True)
class GaugeFn:
    """``phi(r) = r^d`` (``kind="power"``) or ``(ln+ 1/r)^-gamma`` (``kind="log-power"``).

    The log-power gauge is ``+inf`` for ``r >= 1`` so that it stays increasing.
    """

    kind: str
    param: float

    def __post_init__(self):
        if self.kind not in ("power", "log-power"):
            raise ValueError(f"unknown gauge kind {self.kind!r}")
        if not self.param > 0:
            raise ValueError("gauge parameter must be positive")

    @classmethod
    def power(cls, d: float) -> GaugeFn:
        return cls("power", d)

    @classmethod
    def log_power(cls, gamma: float) -> GaugeFn:
        return cls("log-power", gamma)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "power":
            out = r**self.param
        else:
            with np.errstate(divide="ignore"):
                lg = np.log(1.0 / np.where(r > 0, r, 1.0))
                out = np.where(lg > 0, np.abs(lg) ** -self.param, np.inf)
        out = np.where(r > 0, out, 0.0)
        return float(out) if out.ndim == 0 else out

    def describe(self) -> dict:
        return {"kind": self.kind, "param": self.param}


@dataclass
class CoverResult:
    set_descriptor: dict
    epsilon: float
    balls: list[ParabolicBall]
    value: float
    method: str
    gauge: GaugeFn
    candidates: dict = field(default_factory=dict)
    volume_lower_bound: float | None = None
    verified: bool = False

    def to_record(self) -> dict:
        return {
            "set": self.set_descriptor,
            "epsilon": self.epsilon,
            "gauge": self.gauge.describe(),
            "method": self.method,
            "value": self.value,
            "candidates": dict(self.candidates),
            "volume_lower_bound": self.volume_lower_bound,
            "verified": self.verified,
            "balls": [{"t0": b.t0, "x0": list(b.x0), "r": b.r} for b in self.balls],
        }


# -- tilings --------------------------------------------------------------------


@dataclass(frozen=True)
class TileLevel:
    """Tiles of ``2^space_shift`` cells per spatial axis and ``2^time_shift`` time steps."""

    space_shift: int
    time_shift: int
    radius: float


def tile_levels(grid: SpaceTimeGrid, alpha: float) -> list[TileLevel]:
    """Nested parabolic tile levels; radii strictly increase with the level."""
    n = grid.n
    levels = []
    k = 0
    max_j = int(math.log2(grid.N)) + 1
    for j in range(max_j):
        s = grid.dx * 2**j
        target = (math.sqrt(n) * s / 2) ** (2 * alpha) * 2 / grid.dt
        want = max(0, int(round(math.log2(target)))) if target > 0 else 0
        if j:
            want = min(max(want, k), k + 2)
        k = want
        rad = max(math.sqrt(n) * s / 2, (grid.dt * 2**k / 2) ** (1 / (2 * alpha))) * _PAD
        levels.append(TileLevel(j, k, rad))
    return levels


def _tile_ball(grid, level: TileLevel, tile, alpha) -> ParabolicBall:
    ti, *xi = tile
    bt, bx = 2**level.time_shift, 2**level.space_shift
    t0 = (ti * bt + (bt - 1) / 2) * grid.dt
    x0 = tuple(grid.x[0] + (c * bx + (bx - 1) / 2) * grid.dx for c in xi)
    return ParabolicBall(t0, x0, level.radius, alpha)


def covers(kset: CompactSet, balls) -> bool:
    """True if every grid point of the set lies in one of the (open) balls."""
    if kset.is_empty:
        return True
    g = kset.grid
    pts = np.argwhere(kset.mask)
    t = g.t[pts[:, 0]]
    x = g.x[pts[:, 1:]]
    hit = np.zeros(len(pts), dtype=bool)
    for b in balls:
        hit |= b.contains(t, x)
    return bool(hit.all())


# -- content ----------------------------------------------------------------------


def _single_ball(kset, alpha, rmin):
    g = kset.grid
    pts = np.argwhere(kset.mask)
    t = g.t[pts[:, 0]]
    x = g.x[pts[:, 1:]]
    tc = 0.5 * (t.min() + t.max())
    lo, hi = x.min(axis=0), x.max(axis=0)
    xc = 0.5 * (lo + hi)
    half_t = 0.5 * (t.max() - t.min())
    half_diag = 0.5 * float(np.sqrt(np.sum((hi - lo) ** 2)))
    r = max(half_t ** (1 / (2 * alpha)), half_diag, rmin) * _PAD
    return ParabolicBall(float(tc), tuple(float(c) for c in xc), r, alpha)


def _tree(kset, levels, gauge, alpha):
    """Per-level single-scale costs and the exact tree optimum with its balls."""
    g = kset.grid
    base = np.array([levels[0].time_shift] + [levels[0].space_shift] * g.n)
    tiles = np.unique(np.argwhere(kset.mask) >> base, axis=0)
    cost = np.full(len(tiles), gauge(levels[0].radius))
    choice = np.ones(len(tiles), dtype=bool)
    history = [(tiles, cost, choice, None)]
    dyadic = [len(tiles) * gauge(levels[0].radius)]
    for lev_prev, lev in zip(levels, levels[1:]):
        shift = np.array([lev.time_shift - lev_prev.time_shift] + [lev.space_shift - lev_prev.space_shift] * g.n)
        parents = tiles >> shift
        utiles, inverse = np.unique(parents, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        child_sum = np.bincount(inverse, weights=cost, minlength=len(utiles))
        own = gauge(lev.radius)
        choice = own <= child_sum
        cost = np.where(choice, own, child_sum)
        history.append((utiles, cost, choice, inverse))
        dyadic.append(len(utiles) * own)
        tiles = utiles
    # unwind: which tiles become balls
    balls = []
    active = np.ones(len(history[-1][0]), dtype=bool)
    for lvl in range(len(history) - 1, -1, -1):
        tiles_l, _, choice_l, inverse_l = history[lvl]
        for tile in tiles_l[active & choice_l]:
            balls.append(_tile_ball(g, levels[lvl], tuple(int(v) for v in tile), alpha))
        if lvl:
            refine = active & ~choice_l
            active = refine[inverse_l]
    return float(history[-1][1].sum()), balls, dyadic


def _points_per_ball(grid, rho, alpha):
    # a ball of radius rho meets at most this many grid points
    return (2 * rho / grid.dx + 1) ** grid.n * (2 * rho ** (2 * alpha) / grid.dt + 1)


def _count_lower_bound(kset, gauge, alpha, rmin, epsilon, steps=64):
    """``count * min phi(rho) / P(rho)`` over admissible radii, bounded below piecewise."""
    edges = np.geomspace(rmin, epsilon, steps + 1)
    lo = gauge(edges[:-1]) / _points_per_ball(kset.grid, edges[1:], alpha)
    return float(kset.count * np.min(lo))


def hausdorff_content(kset: CompactSet, gauge: GaugeFn, epsilon: float, method: str = BEST, alpha: float | None = None) -> CoverResult:
    """Upper bound on ``H_epsilon^{phi, alpha}(K)`` from explicit covers with radii ``< epsilon``.

    ``alpha`` defaults to the one in the set descriptor.  Radii never go
    below the grid resolution (half a cell in the parabolic metric), since a
    grid point stands for its cell.  Every method is monotone under
    inclusion; the tree bound is also subadditive, the single-ball candidate
    (and hence ``best``) is not.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if alpha is None:
        alpha = kset.descriptor.get("alpha")
        if alpha is None:
            raise ValueError("alpha is required for sets without one in their descriptor")
    g = kset.grid
    levels = [lev for lev in tile_levels(g, alpha) if lev.radius < epsilon]
    if not levels:
        raise ValueError(f"epsilon={epsilon:g} is below the grid resolution {tile_levels(g, alpha)[0].radius:g}")
    if kset.is_empty:
        return CoverResult(kset.descriptor, epsilon, [], 0.0, method, gauge, verified=True)
    cands: dict[str, tuple[float, list]] = {}
    if method in (SINGLE, BEST):
        b = _single_ball(kset, alpha, levels[0].radius)
        if b.r < epsilon:
            cands[SINGLE] = (gauge(b.r), [b])
        elif method == SINGLE:
            raise ValueError(f"the circumscribing ball (r={b.r:g}) is not below epsilon={epsilon:g}")
    if method in (DYADIC, TREE, BEST):
        tree_value, tree_balls, dyadic = _tree(kset, levels, gauge, alpha)
        if method in (DYADIC, BEST):
            j = int(np.argmin(dyadic))
            tiles = np.unique(np.argwhere(kset.mask) >> np.array([levels[j].time_shift] + [levels[j].space_shift] * g.n), axis=0)
            cands[DYADIC] = (dyadic[j], [_tile_ball(g, levels[j], tuple(int(v) for v in t), alpha) for t in tiles])
        if method in (TREE, BEST):
            cands[TREE] = (tree_value, tree_balls)
    name = min(cands, key=lambda k: cands[k][0])
    value, balls = cands[name]
    vlb = _count_lower_bound(kset, gauge, alpha, levels[0].radius, epsilon)
    res = CoverResult(kset.descriptor, epsilon, balls, float(value), name, gauge,
                      {k: v[0] for k, v in cands.items()}, vlb)
    res.verified = covers(kset, balls) and all(b.r < epsilon for b in balls)
    if not res.verified:
        raise AssertionError("computed cover misses set points")
    return res


# -- comparison with capacity ------------------------------------------------------


def _check_comparison_exponents(n, alpha, p, q, p_tilde, q_tilde) -> float:
    if not (p <= p_tilde and q <= q_tilde):
        raise ValueError("need p <= p~ and q <= q~")
    rel = (Fraction(1) / _frac(q) - Fraction(1) / _frac(q_tilde)) + Fraction(n) / (2 * _frac(alpha)) * (
        Fraction(1) / _frac(p) - Fraction(1) / _frac(p_tilde))
    if rel != 1:
        raise ValueError(f"exponent relation violated: (1/q - 1/q~) + n/(2 alpha) (1/p - 1/p~) = {rel}, not 1")
    beta = min(p, q) * (n / p + 2 * alpha / q - 2 * alpha)
    if not beta > 0:
        raise ValueError(f"need beta > 0, got {beta:g}")
    return beta


def _frac(v) -> Fraction:
    return Fraction(v).limit_denominator(10**6)


@dataclass
class ComparisonReport:
    beta: float
    lebesgue_exponent: float
    rows: list[dict]
    slopes: dict
    passed: bool
    tolerance: float
    flags: list[str] = field(default_factory=list)

    CSV_COLUMNS = ("scale", "lebesgue_term", "capacity_lo", "capacity_hi", "content")

    def to_record(self) -> dict:
        return {
            "beta": self.beta,
            "lebesgue_exponent": self.lebesgue_exponent,
            "rows": self.rows,
            "slopes": self.slopes,
            "passed": self.passed,
            "tolerance": self.tolerance,
            "flags": list(self.flags),
        }

    def csv_rows(self) -> list[tuple]:
        return [tuple(row[c] for c in self.CSV_COLUMNS) for row in self.rows]


def comparison_experiment(A_interval, B_box, p, q, alpha, p_tilde, q_tilde, delta: float, *, n: int | None = None,
                          shrinks=(1.0, 0.5, 0.25, 0.125), solver_cfg=None, cells: int = 8, tcells: int = 8,
                          width: float = 16.0, tol: float = 0.15) -> ComparisonReport:
    """Lebesgue term, capacity bracket and ``r^beta`` content of shrinking copies of ``A x B``.

    The copy at scale ``s`` is ``(s^{2 alpha} A) x (s B)`` on a grid rescaled the
    same way (``cells`` points per unit length of ``B`` at ``s = 1``, ``tcells``
    steps per unit of time).  Each quantity is fitted against ``log s`` and
    must have slope within ``tol * beta`` of ``beta``.
    """
    B_box = [tuple(map(float, b)) for b in B_box]
    n = len(B_box) if n is None else n
    if len(B_box) != n:
        raise ValueError("B_box must have one interval per spatial dimension")
    a0, a1 = map(float, A_interval)
    if not 0 < a0 < a1:
        raise ValueError("A must be an interval in t > 0")
    beta = _check_comparison_exponents(n, alpha, p, q, p_tilde, q_tilde)
    from .capacity import SolverConfig, capacity_bracket
    from .evolve import make_plan
    from .grid import make_grid
    from .norms import fit_scaling

    cfg = solver_cfg if isinstance(solver_cfg, SolverConfig) else SolverConfig.from_dict(solver_cfg)
    pq = min(p, q)
    shrinks = sorted((float(s) for s in shrinks), reverse=True)
    if len(shrinks) < 3:
        raise ValueError("need at least 3 shrink factors")
    leb_exp = pq * (2 * alpha / q_tilde + n / p_tilde)
    N = int(round(width * cells))
    N += N % 2
    M = int(math.ceil(a1 * tcells)) + 2
    rows, flags = [], []
    for s in shrinks:
        h = s ** (2 * alpha)
        grid = make_grid(n, width * s, N, M * h / tcells, M)
        A = (a0 * h, a1 * h)
        B = [(lo * s, hi * s) for lo, hi in B_box]
        kset = CompactSet.from_box(grid, A, B)
        leb = (A[1] - A[0]) ** (pq / q_tilde) * math.prod(hi - lo for lo, hi in B) ** (pq / p_tilde)
        res = capacity_bracket(kset, p, q, make_plan(grid, alpha), cfg)
        cov = hausdorff_content(kset, GaugeFn.power(beta), delta, alpha=alpha)
        flags += [f"s={s:g}: {f}" for f in res.flags]
        rows.append({
            "scale": s,
            "lebesgue_term": leb,
            "capacity_lo": res.dual_value,
            "capacity_hi": res.primal_value,
            "content": cov.value,
            "content_method": cov.method,
            "points": kset.count,
            "grid": grid.describe(),
        })
    slopes = {}
    for key in ("lebesgue_term", "capacity_lo", "capacity_hi", "content"):
        slopes[key] = fit_scaling(shrinks, [row[key] for row in rows]).fitted_exponent
    ok = all(abs(v - beta) <= tol * beta for v in slopes.values())
    return ComparisonReport(beta, leb_exp, rows, slopes, bool(ok), tol, flags)


@dataclass
class LogGaugeReport:
    gamma: float
    rows: list[dict]
    ratio_slope: float
    max_ratio: float
    passed: bool
    slope_bound: float
    flags: list[str] = field(default_factory=list)

    def to_record(self) -> dict:
        return dict(self.__dict__)


def log_gauge_experiment(p, q, alpha, radii, *, n: int = 1, epsilon: float = 0.5, solver_cfg=None, t0: float = 0.5,
                         cells: int = 4, tcells: int = 4, slope_bound: float = 0.2,
                         capacities: dict | None = None) -> LogGaugeReport:
    """Capacity of ``B_r(t0, 0)`` over its content with gauge ``(ln 1/r)^-gamma``.

    ``gamma = (p ^ q)(1 - 1/q)``.  The ratio counts as bounded when the slope
    of ``log ratio`` against ``log log (1/r)`` is at most ``slope_bound``.
    ``capacities`` maps radius to a precomputed capacity midpoint and skips
    the solver for those radii.
    """
    from .capacity import SolverConfig, capacity_bracket
    from .capacity.experiments import critical_grid
    from .evolve import make_plan
    from .norms import fit_scaling
    from .regularity import CRITICAL, classify

    regime = classify(n, alpha, p, q)
    if regime.classification != CRITICAL:
        raise ValueError(f"log-gauge experiment needs the critical regime, got {regime.classification}")
    radii = sorted((float(r) for r in radii), reverse=True)
    if len(radii) < 3 or radii[0] / radii[-1] < 4 - 1e-12:
        raise ValueError("need at least 3 radii spanning at least 2 dyadic steps")
    cfg = solver_cfg if isinstance(solver_cfg, SolverConfig) else SolverConfig.from_dict(solver_cfg)
    gamma = min(p, q) * (1 - 1 / q)
    gauge = GaugeFn.log_power(gamma)
    capacities = capacities or {}
    rows, flags = [], []
    for r in radii:
        grid = critical_grid(n, alpha, r, t0, cells=cells, tcells=tcells)
        kset = CompactSet.from_ball(grid, ParabolicBall(t0, (0.0,) * n, r, alpha))
        if r in capacities:
            cap = float(capacities[r])
        else:
            res = capacity_bracket(kset, p, q, make_plan(grid, alpha), cfg)
            flags += [f"r={r:g}: {f}" for f in res.flags]
            cap = res.midpoint
        cov = hausdorff_content(kset, gauge, epsilon, alpha=alpha)
        rows.append({"r": r, "capacity": cap, "content": cov.value, "method": cov.method,
                     "ratio": cap / cov.value})
    fit = fit_scaling(radii, [row["ratio"] for row in rows], abscissa="loglog")
    ok = fit.fitted_exponent <= slope_bound
    return LogGaugeReport(gamma, rows, fit.fitted_exponent, max(row["ratio"] for row in rows), bool(ok),
                          slope_bound, flags)
