"""Regularity checks for the free evolution and the Duhamel potential.

* continuity of ``t -> R_alpha f(t)`` in sup norm,
* exponential integrability of ``S_alpha F`` when ``n/p + 2 alpha/q = 2 alpha``,
* Hölder fits of ``S_alpha F`` when ``n/p + 2 alpha/q < 2 alpha``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .evolve import make_plan
from .grid import Field, ParabolicBall, ball_mask
from .norms import conjugate, fit_scaling, lp_norm, mixed_norm_values

__all__ = [
    "RegularityRegime",
    "HolderFit",
    "ContinuityReport",
    "classify",
    "continuity_check",
    "exp_integrability_check",
    "holder_fit",
    "StabilityStudy",
    "exp_integrability_study",
    "holder_study",
]

SUPERCRITICAL, CRITICAL, SUBCRITICAL = "supercritical", "critical", "subcritical"


def _frac(v) -> Fraction:
    return Fraction(v).limit_denominator(10**6)


@dataclass(frozen=True)
class RegularityRegime:
    n: int
    alpha: float
    p: float
    q: float
    criticality: Fraction
    classification: str

    def to_record(self) -> dict:
        return {
            "n": self.n,
            "alpha": self.alpha,
            "p": self.p,
            "q": self.q,
            "criticality": str(self.criticality),
            "classification": self.classification,
        }


def classify(n: int, alpha: float, p: float, q: float) -> RegularityRegime:
    """Sign of ``n/p + 2 alpha/q - 2 alpha`` in exact rational arithmetic."""
    if not 1 <= p < np.inf:
        raise ValueError(f"p must lie in [1, inf), got {p}")
    if not 1 < q < np.inf:
        raise ValueError(f"q must lie in (1, inf), got {q}")
    a = _frac(alpha)
    c = Fraction(n) / _frac(p) + 2 * a / _frac(q) - 2 * a
    kind = SUPERCRITICAL if c > 0 else CRITICAL if c == 0 else SUBCRITICAL
    return RegularityRegime(n, alpha, p, q, c, kind)


# -- continuity of the free evolution ------------------------------------


@dataclass
class ContinuityReport:
    t: float
    steps: list[float]
    sup_differences: list[float]
    bound_ratios: list[float]
    fitted_exponent: float
    passed: bool

    def to_record(self) -> dict:
        return dict(self.__dict__)


def continuity_check(alpha: float, f: Field, p: float, t: float, steps) -> ContinuityReport:
    """``max_x |R f(t+h) - R f(t)|`` along a decreasing ladder of steps ``h``.

    The differences are compared with ``|t^-s - (t+h)^-s| ||f||_p`` where
    ``s = n/(2 alpha p)``; the ratios should stay bounded as ``h -> 0`` and
    the differences should vanish linearly.
    """
    if not f.is_slice:
        raise ValueError("continuity_check takes a slice field")
    if t <= 0:
        raise ValueError("t must be positive")
    steps = sorted((float(h) for h in steps), reverse=True)
    plan = make_plan(f.grid, alpha)
    fh = plan._fwd(f.values)
    base = plan.multiplier(t)
    s = f.grid.n / (2 * alpha * p)
    norm = lp_norm(f, p)
    diffs, ratios = [], []
    for h in steps:
        d = float(np.abs(plan._inv(fh * (plan.multiplier(t + h) - base))).max())
        diffs.append(d)
        ratios.append(d / (abs(t**-s - (t + h) ** -s) * norm))
    fit = fit_scaling(steps, diffs)
    ok = all(a >= b for a, b in zip(diffs, diffs[1:])) and fit.fitted_exponent > 0.9
    ok = ok and max(ratios) / min(ratios) < 2.0
    return ContinuityReport(t, steps, diffs, ratios, fit.fitted_exponent, bool(ok))


# -- exponential integrability -------------------------------------------


@dataclass
class ExpIntegrability:
    C_star: float
    mean_exp: float
    threshold: float
    norm: float
    sup_potential: float

    def __iter__(self):
        return iter((self.C_star, self.mean_exp))

    def to_record(self) -> dict:
        return dict(self.__dict__)


def _ball_average(values, grid, mask):
    w = grid.time_weights.reshape((-1,) + (1,) * grid.n) * mask
    return float(np.sum(w * values) / np.sum(w))


def exp_integrability_check(
    regime: RegularityRegime,
    F: Field,
    ball: ParabolicBall,
    threshold: float = 10.0,
    k_range: tuple[int, int] = (-20, 60),
) -> ExpIntegrability:
    """Smallest dyadic ``C`` with ``avg_ball exp((S F / (C ||F||))^q') <= threshold``.

    The ball must satisfy ``r0 = t0^(1/2 alpha)`` (it touches ``t = 0``).
    Returns an object that also unpacks as ``(C_star, mean_exp)``; ``C_star``
    is ``inf`` when no ``C`` in ``2**k_range`` qualifies.
    """
    if regime.classification != CRITICAL:
        raise ValueError(f"exponential integrability needs the critical regime, got {regime.classification}")
    if ball.alpha != regime.alpha:
        raise ValueError("ball and regime use different alpha")
    if abs(ball.r - ball.t0 ** (1 / (2 * ball.alpha))) > 1e-9 * max(1.0, ball.r):
        raise ValueError("ball radius must equal t0^(1/(2 alpha))")
    g = F.grid
    norm = mixed_norm_values(F.values, g, regime.p, regime.q)
    if not 0 < norm < np.inf:
        raise ValueError("F must have positive finite norm")
    mask = ball_mask(g, ball).values
    if not mask.any():
        raise ValueError("ball contains no grid points")
    u = np.maximum(make_plan(g, regime.alpha).forward(F.values), 0.0) / norm
    qd = conjugate(regime.q)
    inside = u[mask > 0]
    best = None
    with np.errstate(over="ignore"):
        for k in range(k_range[0], k_range[1] + 1):
            C = 2.0**k
            vals = np.zeros_like(u)
            vals[mask > 0] = np.exp((inside / C) ** qd)
            avg = _ball_average(vals, g, mask)
            if avg <= threshold:
                best = (C, avg)
                break
    if best is None:
        return ExpIntegrability(np.inf, np.inf, threshold, norm, float(inside.max()))
    return ExpIntegrability(best[0], best[1], threshold, norm, float(inside.max()))


# -- Hölder fits ---------------------------------------------------------


@dataclass
class HolderFit:
    direction: str
    fitted_exponent: float
    theory_exponent: float
    samples: list[tuple[float, float]] = field(default_factory=list)
    passed: bool = False
    vacuous: bool = False
    flags: list[str] = field(default_factory=list)

    def to_record(self) -> dict:
        d = dict(self.__dict__)
        d["samples"] = [list(s) for s in self.samples]
        return d


HOLDER_TOL = 0.15


def holder_fit(regime: RegularityRegime, F: Field, base_point, direction: str, tol: float = HOLDER_TOL) -> HolderFit:
    """Log-log fit of the local modulus of continuity of ``S F`` at a point.

    The modulus at ``h`` is ``max |S F(point + h') - S F(point)|`` over grid
    offsets ``|h'| <= h``; a plain difference at a single offset is not
    monotone for oscillating fields and can fit a negative slope.  Space
    offsets run over ``[2 dx, L/16]`` along the first axis (both signs), time
    offsets over ``[2 dt, T/8]`` forward in time.  ``base_point`` is
    ``(t0, x0)`` and is snapped to the nearest grid point.
    """
    if regime.classification != SUBCRITICAL:
        raise ValueError(f"Hölder fits need the subcritical regime, got {regime.classification}")
    if direction not in ("space", "time"):
        raise ValueError(f"direction must be 'space' or 'time', got {direction!r}")
    g = F.grid
    t0, x0 = base_point
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if t0 <= 0:
        raise ValueError("base point needs t0 > 0")
    k0 = int(round(t0 / g.dt))
    j0 = [int(round((c + 0.5 * g.L) / g.dx)) for c in x0]
    if not 0 < k0 < g.M or any(not 0 <= j < g.N for j in j0):
        raise ValueError("base point must be interior to the grid")
    u = make_plan(g, regime.alpha).forward(F.values)
    a = float(-classify(regime.n, regime.alpha, regime.p, regime.q).criticality)
    theory = a if direction == "space" else a / (2 * regime.alpha)
    ref = u[(k0, *j0)]
    samples = []
    if direction == "space":
        step, hmax = 2, g.L / 16
        while step * g.dx <= hmax * (1 + 1e-12):
            line = u[(k0, slice(None), *j0[1:])]
            near = line[(j0[0] + np.arange(-step, step + 1)) % g.N]
            samples.append((step * g.dx, float(np.abs(near - ref).max())))
            step *= 2
    else:
        step, hmax = 2, g.T / 8
        while step * g.dt <= hmax * (1 + 1e-12) and k0 + step <= g.M:
            near = u[(slice(k0, k0 + step + 1), *j0)]
            samples.append((step * g.dt, float(np.abs(near - ref).max())))
            step *= 2
    if len(samples) < 3:
        raise ValueError("fewer than 3 admissible offsets; refine the grid")
    if max(d for _, d in samples) < 1e-12:
        return HolderFit(direction, np.inf, theory, samples, True, True, ["all differences below 1e-12"])
    hs = np.array([h for h, _ in samples])[::-1]
    ds = np.maximum(np.array([d for _, d in samples])[::-1], 1e-300)
    fit = fit_scaling(hs, ds)
    flags = []
    if direction == "time" and fit.fitted_exponent > 1 + tol:
        flags.append("time exponent above 1")
    ok = fit.fitted_exponent >= theory * (1 - tol)
    return HolderFit(direction, fit.fitted_exponent, theory, samples, bool(ok), False, flags)


# -- seeded studies ---------------------------------------------------------


@dataclass
class StabilityStudy:
    """Per-trial ``C_star`` on a grid and on its refinement."""

    grids: list[dict]
    trials: list[dict]
    max_step_change: int
    passed: bool

    def to_record(self) -> dict:
        return dict(self.__dict__)


def exp_integrability_study(regime: RegularityRegime, grid, ball: ParabolicBall, trial_count: int = 6,
                            seed: int = 0, threshold: float = 10.0) -> StabilityStudy:
    """``C_star`` for the seeded space-time family on ``grid`` and its 2x refinement.

    Passes when every ``C_star`` is finite and moves by at most one dyadic step.
    """
    from . import trials
    from .grid import make_grid

    fine = make_grid(grid.n, grid.L, 2 * grid.N, grid.T, 2 * grid.M)
    per_grid = []
    for g in (grid, fine):
        cs = {}
        for name, F in trials.spacetime_family(g, regime.alpha, trial_count, seed):
            cs[name] = exp_integrability_check(regime, Field(g, F), ball, threshold).C_star
        per_grid.append(cs)
    rows, worst = [], 0
    for name in per_grid[0]:
        a, b = per_grid[0][name], per_grid[1][name]
        step = int(round(abs(np.log2(a / b)))) if np.isfinite(a) and np.isfinite(b) else 10**6
        worst = max(worst, step)
        rows.append({"trial": name, "C_star": [a, b], "steps": step})
    return StabilityStudy([grid.describe(), fine.describe()], rows, worst, worst <= 1)


def holder_study(regime: RegularityRegime, grid, base_point, trial_count: int = 6, seed: int = 0,
                 tol: float = HOLDER_TOL) -> list[HolderFit]:
    """Space and time fits for each member of the seeded space-time family."""
    from . import trials

    fits = []
    for name, F in trials.spacetime_family(grid, regime.alpha, trial_count, seed):
        for direction in ("space", "time"):
            fit = holder_fit(regime, Field(grid, F), base_point, direction, tol)
            fit.flags.insert(0, name)
            fits.append(fit)
    return fits
