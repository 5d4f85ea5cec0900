"""Capacity experiments: power-law scaling, the critical log law, and set-function axioms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..evolve import make_plan
from ..grid import ParabolicBall, SpaceTimeGrid, make_grid
from ..norms import ScalingFit, fit_scaling, mixed_norm_values
from ..regularity import CRITICAL, SUPERCRITICAL, classify
from .sets import CompactSet
from .solvers import SolverConfig, capacity_bracket

__all__ = [
    "ball_grid",
    "indicator_certificate",
    "choose_eta",
    "ScalingReport",
    "scaling_experiment",
    "critical_extremal",
    "CriticalReport",
    "critical_experiment",
    "AxiomReport",
    "axiom_suite",
]

ETAS = (2, 3, 4, 6, 8)


def beta_exponent(n, alpha, p, q) -> float:
    return min(p, q) * (n / p + 2 * alpha / q - 2 * alpha)


# -- the indicator certificate ------------------------------------------------


def indicator_certificate(plan, ball: ParabolicBall, p, q, eta: float) -> tuple[float, float]:
    """Value of ``1_{B_{r,eta}} / (c r^{2 alpha})`` with ``c`` as large as feasibility allows.

    ``B_{r,eta}`` stretches the ball's time extent to ``(eta r)^{2 alpha}``.
    Returns ``(norm^(p^q), c)``; ``c = 0`` and an infinite value when the
    stretched indicator does not reach every point of the ball.
    """
    g = plan.grid
    kset = CompactSet.from_ball(g, ball)
    if kset.is_empty:
        return 0.0, math.inf
    r, a = ball.r, ball.alpha
    t = g.t.reshape((-1,) + (1,) * g.n)
    xs = np.stack(g.coords(), axis=-1)
    d = np.sqrt(np.sum((xs - np.asarray(ball.x0)) ** 2, axis=-1))[None]
    ind = ((np.abs(t - ball.t0) < (eta * r) ** (2 * a)) & (d < r)).astype(float)
    u = plan.forward(ind)
    m = float(u[kset.mask].min())
    if not m > 0:
        return math.inf, 0.0
    c = m / r ** (2 * a)
    value = mixed_norm_values(ind / m, g, p, q) ** min(p, q)
    return value, c


def choose_eta(plan, ball, p, q, etas=ETAS) -> tuple[float, dict]:
    """The ``eta`` giving the smallest certificate value on this ball."""
    values = {float(e): indicator_certificate(plan, ball, p, q, e)[0] for e in etas}
    best = min(values, key=values.get)
    return best, values


# -- supercritical scaling -------------------------------------------------------


def ball_grid(n: int, alpha: float, r: float, cells: int = 8, tcells: int = 8, width: float = 16.0):
    """Grid and ball for ``B_r`` with ``cells`` points per radius, as a rescaled copy of ``r = 1``.

    The ball sits at ``t0 = 2 r^{2 alpha} + dt/2`` and ``x0 = dx/2`` so no grid
    point lies on its boundary, whatever the scale.
    """
    h = r ** (2 * alpha)
    N = int(round(width * cells))
    N += N % 2
    dt = h / tcells
    M = 3 * tcells + 2
    grid = make_grid(n, width * r, N, M * dt, M)
    ball = ParabolicBall(2 * h + 0.5 * dt, (0.5 * grid.dx,) * n, r, alpha)
    return grid, ball


@dataclass
class ScalingReport:
    fit: ScalingFit
    beta: float
    rows: list[dict]
    eta: float | None
    passed: bool
    tolerance: float
    flags: list[str] = field(default_factory=list)

    @property
    def fitted_exponent(self) -> float:
        return self.fit.fitted_exponent

    def to_record(self) -> dict:
        return {
            "fit": self.fit.to_record(),
            "beta": self.beta,
            "rows": self.rows,
            "eta": self.eta,
            "passed": self.passed,
            "tolerance": self.tolerance,
            "flags": list(self.flags),
        }


def scaling_experiment(p, q, alpha, n, radii, solver_cfg=None, cells: int = 8, tcells: int = 8, tol: float = 0.1) -> ScalingReport:
    """Fit ``log capacity`` against ``log r`` over balls on ``r``-rescaled grids."""
    regime = classify(n, alpha, p, q)
    if regime.classification != SUPERCRITICAL:
        raise ValueError(f"scaling experiment needs the supercritical regime, got {regime.classification}")
    radii = sorted((float(r) for r in radii), reverse=True)
    if len(radii) < 3:
        raise ValueError("need at least 3 radii")
    cfg = solver_cfg if isinstance(solver_cfg, SolverConfig) else SolverConfig.from_dict(solver_cfg)
    beta = beta_exponent(n, alpha, p, q)
    rows, eta, flags = [], None, []
    for r in radii:
        grid, ball = ball_grid(n, alpha, r, cells, tcells)
        plan = make_plan(grid, alpha)
        if eta is None:
            eta, _ = choose_eta(plan, ball, p, q)
        res = capacity_bracket(CompactSet.from_ball(grid, ball), p, q, plan, cfg)
        cert, _ = indicator_certificate(plan, ball, p, q, eta)
        flags += [f"r={r:g}: {f}" for f in res.flags]
        rows.append({
            "r": r,
            "primal": res.primal_value,
            "dual": res.dual_value,
            "midpoint": res.midpoint,
            "relative_gap": res.relative_gap,
            "certificate": cert,
            "grid": grid.describe(),
        })
    fit = fit_scaling(radii, [row["midpoint"] for row in rows])
    ok = abs(fit.fitted_exponent - beta) <= tol * beta
    return ScalingReport(fit, beta, rows, eta, bool(ok), tol, flags)


# -- the critical log law -------------------------------------------------------


def critical_extremal(grid: SpaceTimeGrid, alpha: float, t0: float, x0, r: float) -> np.ndarray:
    """``(|t0 - t|^{1/2a} + |x - x0|)^{-2a}`` on the set ``E`` of the critical construction.

    ``E``: ``(2r)^{2a} < t0 - t < (2r)^a`` and ``|t0 - t|^{1/2a} < |x - x0| < 2``.
    """
    t = grid.t.reshape((-1,) + (1,) * grid.n)
    xs = np.stack(grid.coords(), axis=-1)
    d = np.sqrt(np.sum((xs - np.asarray(x0, dtype=float)) ** 2, axis=-1))[None]
    s = t0 - t
    par = np.abs(s) ** (1 / (2 * alpha))
    inE = (s > (2 * r) ** (2 * alpha)) & (s < (2 * r) ** alpha) & (par < d) & (d < 2)
    with np.errstate(divide="ignore"):
        F = np.where(inE, (par + d) ** (-2 * alpha), 0.0)
    return F


@dataclass
class CriticalReport:
    fit: ScalingFit
    target: float
    rows: list[dict]
    lower_ratio_spread: float
    upper_ratio_spread: float
    certificate_fit: ScalingFit
    passed: bool
    tolerance: float
    stability: float
    flags: list[str] = field(default_factory=list)

    @property
    def fitted_exponent(self) -> float:
        return self.fit.fitted_exponent

    def to_record(self) -> dict:
        return {
            "fit": self.fit.to_record(),
            "target": self.target,
            "rows": self.rows,
            "lower_ratio_spread": self.lower_ratio_spread,
            "upper_ratio_spread": self.upper_ratio_spread,
            "certificate_fit": self.certificate_fit.to_record(),
            "passed": self.passed,
            "tolerance": self.tolerance,
            "stability": self.stability,
            "flags": list(self.flags),
        }


def critical_grid(n, alpha, r, t0=0.5, width=8.0, cells=4, tcells=4):
    """Fixed domain ``[-width/2, width/2)^n``, resolution ``r / cells`` in space."""
    N = int(round(width * cells / r))
    dt = r ** (2 * alpha) / tcells
    M = int(math.ceil((t0 + r ** (2 * alpha)) / dt)) + 1
    return make_grid(n, width, N, M * dt, M)


def critical_experiment(p, q, alpha, n, radii, solver_cfg=None, t0: float = 0.5, cells: int = 4, tcells: int = 4,
                        tol: float = 0.2, stability: float = 2.0) -> CriticalReport:
    """Fit ``log capacity`` against ``log log(1/r)`` for balls ``B_r(t0, 0)`` on a fixed domain.

    Besides the solver bracket, evaluates the explicit extremal on ``E`` and
    checks that ``min_B S F / ln(1/(2r)^a)`` and ``||F||^q / ln(1/(2r)^a)``
    vary by at most a factor ``stability`` across the radii.
    """
    regime = classify(n, alpha, p, q)
    if regime.classification != CRITICAL:
        raise ValueError(f"critical experiment needs the critical regime, got {regime.classification}")
    radii = sorted((float(r) for r in radii), reverse=True)
    if len(radii) < 3 or radii[0] / radii[-1] < 4 - 1e-12:
        raise ValueError("need at least 3 radii spanning at least 2 dyadic steps")
    if (2 * radii[0]) ** alpha > t0 + 1e-12:
        raise ValueError(f"largest radius too big for t0={t0}: need (2r)^alpha <= t0")
    cfg = solver_cfg if isinstance(solver_cfg, SolverConfig) else SolverConfig.from_dict(solver_cfg)
    target = min(p, q) * (1 / q - 1)
    rows, flags = [], []
    for r in radii:
        grid = critical_grid(n, alpha, r, t0, cells=cells, tcells=tcells)
        plan = make_plan(grid, alpha)
        ball = ParabolicBall(t0, (0.0,) * n, r, alpha)
        kset = CompactSet.from_ball(grid, ball)
        res = capacity_bracket(kset, p, q, plan, cfg)
        flags += [f"r={r:g}: {f}" for f in res.flags]
        F = critical_extremal(grid, alpha, t0, (0.0,) * n, r)
        SF_min = float(plan.forward(F)[kset.mask].min())
        normF = mixed_norm_values(F, grid, p, q)
        ell = alpha * math.log(1 / (2 * r))
        rows.append({
            "r": r,
            "primal": res.primal_value,
            "dual": res.dual_value,
            "midpoint": res.midpoint,
            "relative_gap": res.relative_gap,
            "extremal_min_SF": SF_min,
            "extremal_norm_q": normF**q,
            "log_scale": ell,
            "lower_ratio": SF_min / ell,
            "upper_ratio": normF**q / ell,
            "certificate": (normF / SF_min) ** min(p, q),
            "grid": grid.describe(),
        })
    fit = fit_scaling(radii, [row["midpoint"] for row in rows], abscissa="loglog")
    cert_fit = fit_scaling(radii, [row["certificate"] for row in rows], abscissa="loglog")
    lo = [row["lower_ratio"] for row in rows]
    up = [row["upper_ratio"] for row in rows]
    lo_spread, up_spread = max(lo) / min(lo), max(up) / min(up)
    ok = abs(fit.fitted_exponent - target) <= tol * abs(target)
    ok = ok and lo_spread <= stability and up_spread <= stability
    return CriticalReport(fit, target, rows, lo_spread, up_spread, cert_fit, bool(ok), tol, stability, flags)


# -- axioms ------------------------------------------------------------------------


@dataclass
class AxiomReport:
    checks: list[dict]

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def to_record(self) -> dict:
        return {"passed": self.passed, "checks": self.checks}


def axiom_suite(plan, p, q, solver_cfg=None, r: float | None = None, t0: float | None = None,
                shift_cells: int = 8, translation_tol: float = 1e-9) -> AxiomReport:
    """Empty set, monotonicity, subadditivity and translation invariance on one grid."""
    g = plan.grid
    a = plan.alpha
    cfg = solver_cfg if isinstance(solver_cfg, SolverConfig) else SolverConfig.from_dict(solver_cfg)
    if t0 is None:
        t0 = 0.5 * g.T
    if r is None:
        r = min(g.L / 16, 0.5 * (0.45 * g.T) ** (1 / (2 * a)))
    x_off = (0.5 * g.dx,) * g.n
    ball = lambda rad, shift=0.0: ParabolicBall(t0, (x_off[0] + shift,) + x_off[1:], rad, a)  # noqa: E731
    checks = []

    def bracket(K):
        return capacity_bracket(K, p, q, plan, cfg)

    empty = bracket(CompactSet.empty(g))
    checks.append({"name": "empty set", "passed": empty.primal_value == 0.0 and empty.dual_value == 0.0,
                   "primal": empty.primal_value})

    K1 = CompactSet.from_ball(g, ball(r))
    K2 = CompactSet.from_ball(g, ball(2 * r))
    b1, b2 = bracket(K1), bracket(K2)
    slack = b1.gap + b2.gap
    checks.append({
        "name": "monotone",
        "passed": K1.issubset(K2) and b1.dual_value <= b2.primal_value and b1.primal_value <= b2.primal_value + slack,
        "small": [b1.dual_value, b1.primal_value],
        "large": [b2.dual_value, b2.primal_value],
    })

    sep = 2.5 * r
    A = CompactSet.from_ball(g, ball(r, -sep))
    B = CompactSet.from_ball(g, ball(r, sep))
    bA, bB, bU = bracket(A), bracket(B), bracket(A.union(B))
    checks.append({
        "name": "subadditive",
        "passed": bU.dual_value <= bA.primal_value + bB.primal_value
        and bU.primal_value <= bA.primal_value + bB.primal_value + bU.gap,
        "union": [bU.dual_value, bU.primal_value],
        "parts": [bA.primal_value, bB.primal_value],
    })

    shifted = bracket(K1.translate((shift_cells,) + (0,) * (g.n - 1)))
    dp = abs(shifted.primal_value - b1.primal_value) / b1.primal_value
    dd = abs(shifted.dual_value - b1.dual_value) / b1.dual_value
    checks.append({
        "name": "translation",
        "passed": dp <= translation_tol and dd <= translation_tol,
        "primal_change": dp,
        "dual_change": dd,
    })
    return AxiomReport(checks)
