"""Primal and dual solvers for the discrete ``(alpha, p, q)``-capacity.

Primal:  minimize ``||F||_{L^q_t L^p_x}`` over ``F >= 0`` with ``A F >= 1``.
Dual:    maximize ``sum(mu)`` over ``mu >= 0`` with ``||A* mu||_{L^q'_t L^p'_x} <= 1``.

Any feasible pair brackets the optimum by the discrete Hölder inequality,
which holds exactly because norms and pairings share the quadrature weights.
Both solvers return values raised to ``min(p, q)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from ..evolve import SemigroupPlan
from ..grid import Field
from ..norms import conjugate, mixed_norm_values, slice_norms
from .operator import DEFAULT_BUDGET, ConstraintOperator, materialize_operator
from .sets import CompactSet, DiscreteMeasure

__all__ = [
    "SolverConfig",
    "BoundResult",
    "CapacityResult",
    "primal_capacity",
    "dual_capacity",
    "capacity_bracket",
    "upper_bound_of",
    "lower_bound_of",
]

log = logging.getLogger(__name__)

INF = math.inf


@dataclass(frozen=True)
class SolverConfig:
    max_iter: int = 4000
    tol: float = 1e-3
    check_every: int = 20
    power_iters: int = 60
    dual_max_iter: int = 3000
    smooth_p_dual: float = 32.0  # stands in for p' = inf when p = 1
    budget: int = DEFAULT_BUDGET
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict | None) -> SolverConfig:
        if not d:
            return cls()
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown solver settings: {sorted(unknown)}")
        return cls(**d)


def _check_exponents(p, q, need_dual=False):
    if not 1 <= p < INF:
        raise ValueError(f"p must lie in [1, inf), got {p}")
    if not 1 < q < INF:
        raise ValueError(f"q must lie in (1, inf), got {q}")
    if need_dual and p == 1:
        raise ValueError("the dual problem needs p > 1 (p' finite)")


# -- bounds from arbitrary candidates ---------------------------------------


def upper_bound_of(op: ConstraintOperator, F: NDArray, p: float, q: float) -> tuple[float, NDArray | None]:
    """Norm of ``F_+`` rescaled so that ``min_K A F = 1``; ``inf`` if that is impossible."""
    F = np.maximum(F, 0.0)
    m = float(op.forward(F).min())
    if not m > 0:
        return INF, None
    F = F / m
    return mixed_norm_values(F, op.grid, p, q), F


def lower_bound_of(op: ConstraintOperator, mu: NDArray, p: float, q: float) -> tuple[float, NDArray | None, NDArray | None]:
    """Mass of ``mu_+`` rescaled so that ``||A* mu|| = 1`` exactly."""
    mu = np.maximum(mu, 0.0)
    if not mu.any():
        return 0.0, None, None
    G = op.adjoint(mu)
    s = mixed_norm_values(G, op.grid, conjugate(p), conjugate(q))
    if not s > 0:
        return 0.0, None, None
    return float(mu.sum() / s), mu / s, G / s


# -- proximal map of (1/q) ||F||^q + indicator(F >= 0) in the W metric --------


def _bisect(fun, lo, hi, iters=64):
    """Vectorized bisection for increasing ``fun`` with ``fun(lo) <= 0 <= fun(hi)``."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        neg = fun(mid) < 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    return 0.5 * (lo + hi)


def _solve_y(v, theta, p, iters=30):
    """Entrywise root of ``y + theta y^(p-1) = v`` on ``[0, v]`` (``theta`` broadcasts).

    Monotone Newton: on ``y`` from ``y = v`` when ``p >= 2`` (convex), on
    ``z = y^(p-1)`` from ``z = v^(p-1)`` when ``p < 2``.
    """
    if p >= 2:
        y = v.copy()
        for _ in range(iters):
            f = y + theta * y ** (p - 1) - v
            y = np.maximum(y - f / (1 + theta * (p - 1) * y ** (p - 2)), 0.0)
        return y
    e = 1.0 / (p - 1)
    z = v ** (p - 1)
    for _ in range(iters):
        f = z**e + theta * z - v
        z = np.maximum(z - f / (e * z ** (e - 1) + theta), 0.0)
    return z**e


def prox_mixed(V: NDArray, tau: float, p: float, q: float, grid) -> NDArray:
    """``argmin_{F >= 0} (1/q)||F||^q + (1/2 tau)||F - V||_W^2``.

    The time weights cancel slice by slice, leaving one scalar equation per
    slice for its norm ``rho``: entries solve ``y + tau rho^(q-p) y^(p-1) = v``.
    """
    v = np.maximum(V, 0.0)
    if p == 2 and q == 2:
        return v / (1.0 + tau)
    M1 = v.shape[0]
    flat = v.reshape(M1, -1)
    vol = grid.cell_volume
    if p == 2:
        nu = np.sqrt(np.einsum("ij,ij->i", flat, flat) * vol)
        rho = _bisect(lambda r: r + tau * r ** (q - 1) - nu, np.zeros_like(nu), nu)
        scale = np.divide(rho, nu, out=np.zeros_like(nu), where=nu > 0)
        return v * scale.reshape((-1,) + (1,) * (v.ndim - 1))
    if p == 1:
        # y = (v - theta)_+ with theta = tau * ||y||_1^(q-1); increasing in theta
        def phi(theta):
            y = np.maximum(flat - theta[:, None], 0.0)
            return theta - tau * (y.sum(axis=1) * vol) ** (q - 1)

        theta = _bisect(phi, np.zeros(M1), flat.max(axis=1))
        return np.maximum(v - theta.reshape((-1,) + (1,) * (v.ndim - 1)), 0.0)
    nu = slice_norms(v, grid, p)
    shape = (-1,) + (1,) * (v.ndim - 1)
    hi = np.log(np.where(nu > 0, nu, 1.0))

    def y_of(logr):
        return _solve_y(v, (tau * np.exp(logr) ** (q - p)).reshape(shape), p)

    # ||y(rho)||_p - rho changes sign once on (0, ||v||_p]
    logr = _bisect(lambda lr: lr - np.log(np.maximum(slice_norms(y_of(lr), grid, p), 1e-300)), hi - 40.0, hi, iters=48)
    return np.where(nu.reshape(shape) > 0, y_of(logr), 0.0)


def duality_map(G: NDArray, grid, p_dual: float, q_dual: float) -> NDArray:
    """W-gradient of ``(1/q')||G||^q'``: ``||G_k||^(q'-p') G^(p'-1)`` slice by slice."""
    G = np.maximum(G, 0.0)
    s = slice_norms(G, grid, p_dual)
    safe = np.where(s > 0, s, 1.0).reshape((-1,) + (1,) * grid.n)
    pref = np.where(s > 0, s ** (q_dual - 1), 0.0).reshape(safe.shape)
    return pref * (G / safe) ** (p_dual - 1)


# -- results ------------------------------------------------------------------


@dataclass
class BoundResult:
    """One side of the bracket: a certified value and its certificate."""

    value: float
    norm: float
    certificate: object
    iterations: int
    converged: bool
    flags: list[str] = field(default_factory=list)

    def __iter__(self):
        return iter((self.value, self.certificate))


@dataclass
class CapacityResult:
    set: CompactSet
    p: float
    q: float
    alpha: float
    primal_value: float
    dual_value: float
    F_star: Field | None
    mu_star: DiscreteMeasure | None
    iterations: dict
    residuals: dict
    flags: list[str] = field(default_factory=list)

    @property
    def gap(self) -> float:
        return self.primal_value - self.dual_value

    @property
    def relative_gap(self) -> float:
        if self.primal_value == 0:
            return 0.0
        return self.gap / self.primal_value

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.primal_value + self.dual_value)

    def to_record(self) -> dict:
        g = self.set.grid
        return {
            "set": self.set.descriptor,
            "p": self.p,
            "q": self.q,
            "alpha": self.alpha,
            "n": g.n,
            "grid": g.describe(),
            "primal": self.primal_value,
            "dual": self.dual_value,
            "gap": self.gap,
            "relative_gap": self.relative_gap,
            "iterations": dict(self.iterations),
            "residuals": dict(self.residuals),
            "flags": list(self.flags),
        }


# -- solvers -------------------------------------------------------------------


def _empty_flags(kset: CompactSet) -> list[str]:
    return ["sub-resolution"] if kset.descriptor.get("kind") != "empty" else ["empty set"]


def _operator(plan, kset, cfg: SolverConfig) -> ConstraintOperator:
    return materialize_operator(plan, kset, budget=cfg.budget, matrix_free=True)


@dataclass
class _Best:
    upper: float = INF
    F: NDArray | None = None
    lower: float = 0.0
    mu: NDArray | None = None
    power: float = 1.0

    def offer_primal(self, op, F, p, q):
        u, Fs = upper_bound_of(op, F, p, q)
        if u < self.upper:
            self.upper, self.F = u, Fs

    def offer_dual(self, op, mu, p, q):
        lo, mus, _ = lower_bound_of(op, mu, p, q)
        if lo > self.lower:
            self.lower, self.mu = lo, mus

    def rel_gap(self) -> float:
        if self.upper == INF:
            return INF
        return 1.0 - (self.lower / self.upper) ** self.power


def _pdhg(op: ConstraintOperator, p, q, cfg: SolverConfig, best: _Best) -> tuple[int, bool]:
    """Chambolle-Pock on ``min (1/q)||F||^q + i(F >= 0) + i(A F >= 1)``.

    Accelerated when ``p = q = 2`` (the objective is then 1-strongly convex
    in the W metric).
    """
    Lnorm = op.norm_estimate(cfg.power_iters, cfg.seed)
    tau = sigma = 0.99 / Lnorm
    accel = p == 2 and q == 2
    F = np.zeros(op.grid.shape)
    Fbar = F
    mu = np.zeros(op.set.count)
    it = 0
    for it in range(1, cfg.max_iter + 1):
        mu = np.maximum(mu - sigma * (op.forward(Fbar) - 1.0), 0.0)
        AsMu = op.adjoint(mu)
        F_new = prox_mixed(F + tau * AsMu, tau, p, q, op.grid)
        theta = 1.0
        if accel:
            theta = 1.0 / math.sqrt(1.0 + 2.0 * tau)
            tau *= theta
            sigma /= theta
        Fbar = F_new + theta * (F_new - F)
        F = F_new
        if it % cfg.check_every == 0 or it == cfg.max_iter:
            best.offer_primal(op, F, p, q)
            best.offer_dual(op, mu, p, q)
            if best.rel_gap() <= cfg.tol:
                return it, True
    return it, False


def _dual_objective(mu, G, grid, pd, qd):
    return float(mu.sum() - mixed_norm_values(np.maximum(G, 0.0), grid, pd, qd) ** qd / qd)


def _fista_dual(op: ConstraintOperator, p, q, cfg: SolverConfig, best: _Best) -> tuple[int, bool]:
    """Projected accelerated ascent on ``sum(mu) - (1/q')||A* mu||^q'``."""
    grid = op.grid
    pd = cfg.smooth_p_dual if p == 1 else conjugate(p)
    qd = conjugate(q)
    # start from the best multiple of the uniform measure
    nu = np.ones(op.set.count)
    s = mixed_norm_values(np.maximum(op.adjoint(nu), 0.0), grid, pd, qd)
    mu = nu * (nu.sum() / s**qd) ** (1.0 / (qd - 1.0))
    G = op.adjoint(mu)
    Lnorm = op.norm_estimate(cfg.power_iters, cfg.seed)
    step = 1.0 / Lnorm**2
    y, Gy, t = mu, G, 1.0
    Dy = _dual_objective(y, Gy, grid, pd, qd)
    it = 0
    for it in range(1, cfg.dual_max_iter + 1):
        grad = 1.0 - op.forward(duality_map(Gy, grid, pd, qd))
        for _ in range(60):
            mu_new = np.maximum(y + step * grad, 0.0)
            d = mu_new - y
            G_new = op.adjoint(mu_new)
            D_new = _dual_objective(mu_new, G_new, grid, pd, qd)
            if D_new >= Dy + grad @ d - (d @ d) / (2 * step) - 1e-14 * abs(Dy):
                break
            step *= 0.5
        D_mu = _dual_objective(mu, G, grid, pd, qd)
        t_new = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        if D_new < D_mu:  # adaptive restart
            t_new = 1.0
            y, Gy = mu_new, G_new
        else:
            beta = (t - 1) / t_new
            y = mu_new + beta * (mu_new - mu)
            Gy = G_new + beta * (G_new - G)
        mu, G, t = mu_new, G_new, t_new
        Dy = _dual_objective(y, Gy, grid, pd, qd)
        step *= 1.25
        if it % cfg.check_every == 0 or it == cfg.dual_max_iter:
            best.offer_dual(op, mu, p, q)
            best.offer_primal(op, duality_map(G, grid, pd, qd), p, q)
            if best.rel_gap() <= cfg.tol:
                return it, True
    return it, False


def _power(x: float, p, q) -> float:
    return x ** min(p, q)


def primal_capacity(kset: CompactSet, p, q, plan: SemigroupPlan, solver_cfg=None) -> BoundResult:
    """Upper bound on the capacity from a feasible ``F`` (unpacks as ``(value, F)``)."""
    _check_exponents(p, q)
    cfg = SolverConfig.from_dict(solver_cfg) if not isinstance(solver_cfg, SolverConfig) else solver_cfg
    if kset.is_empty:
        return BoundResult(0.0, 0.0, Field.zeros(plan.grid), 0, True, _empty_flags(kset))
    op = _operator(plan, kset, cfg)
    best = _Best(power=min(p, q))
    it, ok = _pdhg(op, p, q, cfg, best)
    flags = [] if ok else ["not converged"]
    return BoundResult(_power(best.upper, p, q), best.upper, Field(plan.grid, best.F), it, ok, flags)


def dual_capacity(kset: CompactSet, p, q, plan: SemigroupPlan, solver_cfg=None) -> BoundResult:
    """Lower bound from a measure with ``||S* mu|| = 1`` (unpacks as ``(value, mu)``).

    For ``p = 1`` the ascent runs on a smooth large-``p'`` surrogate while the
    reported bound uses the exact sup norm.
    """
    _check_exponents(p, q)
    cfg = SolverConfig.from_dict(solver_cfg) if not isinstance(solver_cfg, SolverConfig) else solver_cfg
    if kset.is_empty:
        return BoundResult(0.0, 0.0, DiscreteMeasure(kset, np.zeros(0)), 0, True, _empty_flags(kset))
    op = _operator(plan, kset, cfg)
    best = _Best(power=min(p, q))
    it, ok = _fista_dual(op, p, q, cfg, best)
    flags = [] if ok else ["not converged"]
    return BoundResult(_power(best.lower, p, q), best.lower, DiscreteMeasure(kset, best.mu), it, ok, flags)


def capacity_bracket(kset: CompactSet, p, q, plan: SemigroupPlan, solver_cfg=None) -> CapacityResult:
    """Run both solvers and keep the best certificate on each side."""
    _check_exponents(p, q)
    cfg = SolverConfig.from_dict(solver_cfg) if not isinstance(solver_cfg, SolverConfig) else solver_cfg
    if kset.is_empty:
        return CapacityResult(kset, p, q, plan.alpha, 0.0, 0.0, Field.zeros(plan.grid),
                              DiscreteMeasure(kset, np.zeros(0)), {"primal": 0, "dual": 0},
                              {"primal": 0.0, "dual": 0.0}, _empty_flags(kset))
    op = _operator(plan, kset, cfg)
    best = _Best(power=min(p, q))
    it_p, ok_p = _pdhg(op, p, q, cfg, best)
    it_d, ok_d = _fista_dual(op, p, q, cfg, best)
    flags = [] if (ok_p or ok_d) else ["not converged"]
    upper, lower = _power(best.upper, p, q), _power(best.lower, p, q)
    if upper - lower < -1e-9 * max(1.0, upper):
        raise AssertionError(f"weak duality violated: dual {lower} > primal {upper}")
    F = best.F
    mu = best.mu
    res = {
        "primal_min_constraint": float(op.forward(F).min()) - 1.0,
        "dual_norm": mixed_norm_values(op.adjoint(mu), op.grid, conjugate(p), conjugate(q)) - 1.0,
    }
    if not (ok_p or ok_d):
        log.warning("capacity bracket not converged: relative gap %.3g", best.rel_gap())
    return CapacityResult(kset, p, q, plan.alpha, upper, lower, Field(plan.grid, F), DiscreteMeasure(kset, mu),
                          {"primal": it_p, "dual": it_d}, res, flags)
