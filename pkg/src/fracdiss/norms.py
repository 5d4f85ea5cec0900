"""Mixed Lebesgue norms and empirical Strichartz-type ratios."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.typing import NDArray

from . import trials
from .evolve import make_plan
from .grid import SLICE, Field, SpaceTimeGrid

__all__ = [
    "MixedExponents",
    "ScalingFit",
    "fit_scaling",
    "conjugate",
    "slice_norms",
    "mixed_norm",
    "mixed_norm_values",
    "lp_norm",
    "RatioReport",
    "strichartz_q_tilde",
    "strichartz_ratio_R",
    "strichartz_ratio_S",
    "strichartz_relation_residual",
    "SmoothingReport",
    "smoothing_decay",
]

INF = math.inf


def conjugate(p: float) -> float:
    """Hölder conjugate with the 1 <-> inf convention."""
    if p == 1:
        return INF
    if p == INF:
        return 1.0
    return p / (p - 1)


@dataclass(frozen=True)
class MixedExponents:
    """Spatial exponent ``p`` and temporal exponent ``q`` of ``L^q_t L^p_x``."""

    p: float
    q: float

    def __post_init__(self):
        if not self.p >= 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if not self.q > 1:
            raise ValueError(f"q must be > 1, got {self.q}")

    @property
    def p_dual(self) -> float:
        return conjugate(self.p)

    @property
    def q_dual(self) -> float:
        return conjugate(self.q)

    @property
    def power(self) -> float:
        """``p ^ q = min(p, q)``, the exponent applied to capacities."""
        return min(self.p, self.q)


def _check_exponent(name: str, v: float) -> float:
    v = float(v)
    if not v >= 1:
        raise ValueError(f"{name} must be >= 1 (or inf), got {v}")
    return v


def slice_norms(values: NDArray, grid: SpaceTimeGrid, p: float) -> NDArray:
    """Spatial ``L^p`` norm of every time slice of a space-time array."""
    p = _check_exponent("p", p)
    a = np.abs(values).reshape(values.shape[0], -1)
    if p == INF:
        return a.max(axis=1)
    if p == 1:
        return a.sum(axis=1) * grid.cell_volume
    if p == 2:
        return np.sqrt(np.einsum("ij,ij->i", a, a) * grid.cell_volume)
    # scale by the slice max first so large p does not overflow
    m = a.max(axis=1)
    safe = np.where(m > 0, m, 1.0)
    s = ((a / safe[:, None]) ** p).sum(axis=1) * grid.cell_volume
    return m * s ** (1.0 / p)


def _time_norm(s: NDArray, grid: SpaceTimeGrid, q: float) -> float:
    if q == INF:
        return float(s.max())
    m = s.max()
    if m == 0:
        return 0.0
    return float(m * np.dot(grid.time_weights, (s / m) ** q) ** (1.0 / q))


def mixed_norm_values(values: NDArray, grid: SpaceTimeGrid, p: float, q: float) -> float:
    """``||F||_{L^q_t L^p_x}`` of a raw array of shape ``grid.shape``."""
    q = _check_exponent("q", q)
    return _time_norm(slice_norms(values, grid, p), grid, q)


def lp_norm(f: Field, p: float) -> float:
    """Spatial ``L^p`` norm of a slice field."""
    if not f.is_slice:
        raise ValueError("lp_norm takes a slice field; use mixed_norm for space-time fields")
    return float(slice_norms(f.values[None], f.grid, p)[0])


def mixed_norm(F: Field, p: float, q: float) -> float:
    """``L^q_t L^p_x`` norm: rectangle rule per slice, then trapezoid rule in time.

    ``inf`` in either slot is the maximum over grid points.  A slice field
    is measured in ``L^p_x`` only.
    """
    if F.is_slice:
        _check_exponent("q", q)
        return lp_norm(F, p)
    return mixed_norm_values(F.values, F.grid, p, q)


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares slope of ``log value`` against ``log scale``.

    ``samples`` holds ``(r, value)`` pairs with ``r`` strictly decreasing.
    With ``abscissa="loglog"`` the regressor is ``log(log(1/r))`` instead
    of ``log r``.
    """

    samples: tuple[tuple[float, float], ...]
    fitted_exponent: float
    intercept: float
    r_squared: float
    abscissa: str = "log"

    def to_record(self) -> dict:
        return {
            "samples": [list(s) for s in self.samples],
            "fitted_exponent": self.fitted_exponent,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "abscissa": self.abscissa,
        }


def fit_scaling(scales, values, abscissa: str = "log") -> ScalingFit:
    scales = np.asarray(scales, dtype=float)
    values = np.asarray(values, dtype=float)
    if scales.shape != values.shape or scales.ndim != 1 or len(scales) < 3:
        raise ValueError("need at least 3 (scale, value) samples")
    if np.any(np.diff(scales) >= 0):
        raise ValueError("scales must be strictly decreasing")
    if np.any(values <= 0) or np.any(scales <= 0):
        raise ValueError("scales and values must be positive for a log fit")
    if abscissa == "log":
        x = np.log(scales)
    elif abscissa == "loglog":
        if np.any(scales >= 1):
            raise ValueError("loglog abscissa needs scales < 1")
        x = np.log(np.log(1.0 / scales))
    else:
        raise ValueError(f"unknown abscissa {abscissa!r}")
    y = np.log(values)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - float(np.sum(resid**2)) / ss_tot)
    return ScalingFit(tuple(zip(scales.tolist(), values.tolist())), float(slope), float(intercept), r2, abscissa)


# -- Strichartz-type ratios ------------------------------------------------


@dataclass
class RatioReport:
    """Empirical supremum of a norm ratio over a seeded trial family."""

    params: dict
    ratio: float
    resolution: dict
    seed: int
    trials_used: int
    argmax: str
    flags: list[str] = field(default_factory=list)

    def __float__(self):
        return self.ratio

    def to_record(self) -> dict:
        return {
            "params": self.params,
            "ratio": self.ratio,
            "resolution": self.resolution,
            "seed": self.seed,
            "trials_used": self.trials_used,
            "argmax": self.argmax,
            "flags": list(self.flags),
        }


def _as_fraction(v: float) -> Fraction | None:
    if v == INF:
        return None
    return Fraction(v).limit_denominator(10**6)


def _inv(v: float) -> Fraction:
    return Fraction(0) if v == INF else 1 / _as_fraction(v)


def strichartz_q_tilde(n: int, alpha: float, p: float, p_tilde: float) -> tuple[float, list[str]]:
    """``q~`` from ``1/q~ = (n/2 alpha)(1/p - 1/p~)`` after checking the admissible range."""
    flags: list[str] = []
    if not 1 <= p <= p_tilde:
        raise ValueError(f"need 1 <= p <= p~, got p={p}, p~={p_tilde}")
    if 2 * alpha < n:
        upper = n * p / (n - 2 * alpha)
        if not p_tilde < upper:
            raise ValueError(f"p~={p_tilde} outside the admissible range p~ < {upper:g}")
    else:
        flags.append("2alpha>=n: upper limit on p~ taken as unrestricted")
    inv_q = Fraction(n) / (2 * _as_fraction(alpha)) * (_inv(p) - _inv(p_tilde))
    if inv_q == 0:
        return INF, flags
    if inv_q > 1:
        raise ValueError(f"q~ = {float(1 / inv_q):g} < 1 is not a norm exponent")
    return float(1 / inv_q), flags


def strichartz_relation_residual(n, alpha, p, q, p_tilde, q_tilde) -> float:
    """``(1/q - 1/q~) + (n/2 alpha)(1/p - 1/p~) - 1``, in exact rationals."""
    lhs = (_inv(q) - _inv(q_tilde)) + Fraction(n) / (2 * _as_fraction(alpha)) * (_inv(p) - _inv(p_tilde))
    return float(lhs - 1)


def _semigroup_orbit(plan, f: NDArray) -> NDArray:
    """``R_alpha f`` at every grid time."""
    g = plan.grid
    fh = plan._fwd(f)
    orbit = fh[None] * np.exp(-g.t.reshape((-1,) + (1,) * fh.ndim) * plan.symbol[None])
    return plan._inv(orbit)


def strichartz_ratio_R(alpha, p, p_tilde, grid: SpaceTimeGrid, trial_count: int = 24, seed: int = 0) -> RatioReport:
    """``sup_f ||R_alpha f||_{L^q~_t L^p~_x} / ||f||_{L^p}`` over seeded trials."""
    q_tilde, flags = strichartz_q_tilde(grid.n, alpha, p, p_tilde)
    plan = make_plan(grid, alpha)
    best, arg, used = 0.0, "", 0
    for name, f in trials.spatial_family(grid, trial_count, seed):
        den = lp_norm(Field(grid, f, SLICE), p)
        if den == 0:
            continue
        used += 1
        num = mixed_norm_values(_semigroup_orbit(plan, f), grid, p_tilde, q_tilde)
        if num / den > best:
            best, arg = num / den, name
    params = {"n": grid.n, "alpha": alpha, "p": p, "p_tilde": p_tilde, "q_tilde": q_tilde}
    return RatioReport(params, best, grid.describe(), seed, used, arg, flags)


def strichartz_ratio_S(alpha, p, q, p_tilde, q_tilde, grid: SpaceTimeGrid, trial_count: int = 24, seed: int = 0) -> RatioReport:
    """``sup_F ||S_alpha F||_{L^q~_t L^p~_x} / ||F||_{L^q_t L^p_x}`` over seeded trials."""
    n = grid.n
    if not (1 <= p < p_tilde <= INF and 1 < q < q_tilde < INF):
        raise ValueError(f"need 1 <= p < p~ <= inf and 1 < q < q~ < inf, got p={p}, q={q}, p~={p_tilde}, q~={q_tilde}")
    res = strichartz_relation_residual(n, alpha, p, q, p_tilde, q_tilde)
    if abs(res) > 1e-12:
        raise ValueError(f"scaling relation violated: (1/q-1/q~)+(n/2a)(1/p-1/p~) - 1 = {res:g}")
    plan = make_plan(grid, alpha)
    best, arg, used = 0.0, "", 0
    for name, F in trials.spacetime_family(grid, alpha, trial_count, seed):
        den = mixed_norm_values(F, grid, p, q)
        if den == 0:
            continue
        used += 1
        num = mixed_norm_values(plan.forward(F), grid, p_tilde, q_tilde)
        if num / den > best:
            best, arg = num / den, name
    params = {"n": n, "alpha": alpha, "p": p, "q": q, "p_tilde": p_tilde, "q_tilde": q_tilde}
    return RatioReport(params, best, grid.describe(), seed, used, arg)


@dataclass
class SmoothingReport:
    alpha: float
    n: int
    fit: ScalingFit
    theory_exponent: float
    passed: bool
    tolerance: float

    def to_record(self) -> dict:
        return {
            "alpha": self.alpha,
            "n": self.n,
            "fit": self.fit.to_record(),
            "theory_exponent": self.theory_exponent,
            "passed": self.passed,
            "tolerance": self.tolerance,
        }


def smoothing_decay(alpha, grid: SpaceTimeGrid, times, tol: float = 0.1) -> SmoothingReport:
    """Fit ``sup |(-Delta)^a e^{-t(-Delta)^a} delta|`` against ``t`` for a unit-mass spike.

    The expected slope is ``-(1 + n/(2 alpha))``.
    """
    from .evolve import apply_fractional_laplacian_semigroup

    times = sorted((float(t) for t in times), reverse=True)
    if len(times) < 3:
        raise ValueError("need at least 3 times")
    plan = make_plan(grid, alpha)
    f = Field(grid, trials.spike(grid, (0.5,) * grid.n), SLICE)
    sups = [float(np.abs(apply_fractional_laplacian_semigroup(plan, f, t).values).max()) for t in times]
    fit = fit_scaling(times, sups)
    theory = -(1 + grid.n / (2 * alpha))
    ok = abs(fit.fitted_exponent - theory) <= tol * abs(theory)
    return SmoothingReport(alpha, grid.n, fit, theory, bool(ok), tol)
