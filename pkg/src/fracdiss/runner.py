"""Config-driven experiment runner.

A config is a JSON object with a ``kind`` plus that kind's parameters.
Grids are given as ``{"L", "N", "T", "M"}`` objects (``n`` lives at the top
level), solver settings as a ``solver`` object.  :func:`execute` validates
the config and returns an :class:`Outcome`; writing files is the caller's
business.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

import numpy as np

__all__ = ["ConfigError", "Outcome", "KINDS", "RANDOMIZED", "validate", "execute", "to_jsonable", "apply_override"]


class ConfigError(ValueError):
    """Bad or incomplete configuration; carries the offending field."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class Outcome:
    passed: bool
    summary: dict
    record: dict
    table: tuple[list[str], list[list]] | None = None
    nonconverged: bool = False
    flags: list[str] = field(default_factory=list)


def to_jsonable(obj):
    """Recursively convert numpy scalars, arrays, fractions and tuples for ``json.dumps``."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def apply_override(cfg: dict, assignment: str) -> None:
    """``a.b.c=value``; ``value`` is parsed as JSON when possible, else kept as a string."""
    key, sep, raw = assignment.partition("=")
    if not sep or not key:
        raise ConfigError(assignment, "overrides look like key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = cfg
    parts = key.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(key, f"{part!r} is not an object")
    node[parts[-1]] = value


# -- field access -------------------------------------------------------------------


class _Params:
    """Typed, field-named access to a config dict."""

    def __init__(self, cfg: dict):
        self.cfg = cfg

    def _get(self, key, default):
        if key in self.cfg:
            return self.cfg[key]
        if default is _REQUIRED:
            raise ConfigError(key, f"required for kind {self.cfg.get('kind')!r}")
        return default

    def num(self, key, default=None, *, positive=False):
        v = self._get(key, _REQUIRED if default is None else default)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(key, f"expected a number, got {v!r}")
        if positive and not v > 0:
            raise ConfigError(key, "must be positive")
        return v

    def int(self, key, default=None):
        v = self.num(key, default)
        if int(v) != v:
            raise ConfigError(key, f"expected an integer, got {v!r}")
        return int(v)

    def nums(self, key, default=None, min_len=1):
        v = self._get(key, _REQUIRED if default is None else default)
        if not isinstance(v, list) or len(v) < min_len or not all(isinstance(x, (int, float)) for x in v):
            raise ConfigError(key, f"expected a list of at least {min_len} numbers")
        return [float(x) for x in v]

    def obj(self, key, default=None):
        v = self._get(key, _REQUIRED if default is None else default)
        if not isinstance(v, dict):
            raise ConfigError(key, "expected an object")
        return v

    def str(self, key, default=None):
        v = self._get(key, _REQUIRED if default is None else default)
        if not isinstance(v, str):
            raise ConfigError(key, "expected a string")
        return v

    def n(self):
        n = self.int("n")
        if n not in (1, 2):
            raise ConfigError("n", "must be 1 or 2")
        return n

    def grid(self, key="grid", need_time=True):
        from .grid import make_grid

        g = self.obj(key)
        sub = _Params(dict(g, kind=self.cfg.get("kind")))
        try:
            L, N = sub.num("L", positive=True), sub.int("N")
            T, M = (sub.num("T", positive=True), sub.int("M")) if need_time else (1.0, 2)
            return make_grid(self.n(), L, N, T, M)
        except ConfigError as err:
            raise ConfigError(f"{key}.{err.field}", str(err).split(": ", 1)[1]) from None
        except ValueError as err:
            raise ConfigError(key, str(err)) from None

    def solver(self):
        from .capacity import SolverConfig

        try:
            return SolverConfig.from_dict(self.obj("solver", {}))
        except (TypeError, ValueError) as err:
            raise ConfigError("solver", str(err)) from None


_REQUIRED = object()


# -- experiment kinds -----------------------------------------------------------------


def _refined(grid):
    from .grid import make_grid

    return make_grid(grid.n, grid.L, 2 * grid.N, grid.T, 2 * grid.M)


def _kernel_envelope(P: _Params) -> Outcome:
    from .kernel import envelope_report

    alpha, t = P.num("alpha", positive=True), P.num("t", positive=True)
    grid = P.grid(need_time=False)
    tol = P.num("tol", 0.1)
    rr = P.cfg.get("region_radius")
    waive = bool(P.cfg.get("waive_guard", False))
    fine = _refined(grid)
    reps = [envelope_report(alpha, t, g, rr, waive_guard=waive) for g in (grid, fine)]
    change = max(abs(reps[1].c_lower / reps[0].c_lower - 1), abs(reps[1].c_upper / reps[0].c_upper - 1))
    ok = all(0 < r.c_lower <= r.c_upper < math.inf for r in reps) and change < tol
    summary = {"c_lower": reps[0].c_lower, "c_upper": reps[0].c_upper, "spread": reps[0].spread,
               "relative_change": change}
    return Outcome(ok, summary, {"reports": [r.to_record() for r in reps], "relative_change": change})


def _ratio_pair(fn, grid, tol):
    reps = [fn(g) for g in (grid, _refined(grid))]
    change = abs(reps[1].ratio / reps[0].ratio - 1)
    ok = all(0 < r.ratio < math.inf for r in reps) and change < tol
    summary = {"ratio": reps[0].ratio, "refined_ratio": reps[1].ratio, "relative_change": change}
    flags = sorted({f for r in reps for f in r.flags})
    return Outcome(ok, summary, {"reports": [r.to_record() for r in reps], "relative_change": change}, flags=flags)


def _strichartz_R(P: _Params) -> Outcome:
    from .norms import strichartz_ratio_R

    alpha, p, pt = P.num("alpha", positive=True), P.num("p"), P.num("p_tilde")
    count, seed = P.int("trial_count", 24), P.int("seed")
    grid = P.grid()
    return _ratio_pair(lambda g: strichartz_ratio_R(alpha, p, pt, g, count, seed), grid, P.num("tol", 0.1))


def _strichartz_S(P: _Params) -> Outcome:
    from .norms import strichartz_ratio_S

    alpha, p, q = P.num("alpha", positive=True), P.num("p"), P.num("q")
    pt, qt = P.num("p_tilde"), P.num("q_tilde")
    count, seed = P.int("trial_count", 24), P.int("seed")
    grid = P.grid()
    return _ratio_pair(lambda g: strichartz_ratio_S(alpha, p, q, pt, qt, g, count, seed), grid, P.num("tol", 0.1))


def _continuity(P: _Params) -> Outcome:
    from . import trials
    from .grid import SLICE, Field
    from .regularity import continuity_check

    alpha, p, t = P.num("alpha", positive=True), P.num("p"), P.num("t", positive=True)
    steps = P.nums("steps", min_len=3)
    grid = P.grid()
    reps = []
    for name, f in trials.spatial_family(grid, P.int("trial_count", 3), P.int("seed")):
        rep = continuity_check(alpha, Field(grid, f, SLICE), p, t, steps)
        reps.append(dict(rep.to_record(), trial=name))
    ok = all(r["passed"] for r in reps)
    summary = {"fitted_exponent": min(r["fitted_exponent"] for r in reps), "trials": len(reps)}
    return Outcome(ok, summary, {"trials": reps})


def _regime(P: _Params, want):
    from .regularity import classify

    try:
        regime = classify(P.n(), P.num("alpha", positive=True), P.num("p"), P.num("q"))
    except ValueError as err:
        raise ConfigError("p/q", str(err)) from None
    if regime.classification != want:
        raise ConfigError("p/q", f"kind {P.cfg['kind']!r} needs the {want} regime, got {regime.classification}")
    return regime


def _exp_integrability(P: _Params) -> Outcome:
    from .grid import ParabolicBall
    from .regularity import CRITICAL, exp_integrability_study

    regime = _regime(P, CRITICAL)
    grid = P.grid()
    b = P.obj("ball")
    t0 = _Params(dict(b, kind=P.cfg["kind"])).num("t0", positive=True)
    x0 = tuple(b.get("x0", [0.0] * grid.n))
    ball = ParabolicBall(t0, x0, t0 ** (1 / (2 * regime.alpha)), regime.alpha)
    study = exp_integrability_study(regime, grid, ball, P.int("trial_count", 6), P.int("seed"),
                                    P.num("threshold", 10.0))
    summary = {"max_step_change": study.max_step_change,
               "C_star": [row["C_star"][0] for row in study.trials]}
    return Outcome(study.passed, summary, dict(study.to_record(), regime=regime.to_record()))


def _holder(P: _Params) -> Outcome:
    from .regularity import SUBCRITICAL, holder_study

    regime = _regime(P, SUBCRITICAL)
    grid = P.grid()
    bp = P.obj("base_point")
    base = (_Params(dict(bp, kind=P.cfg["kind"])).num("t", positive=True), bp.get("x", [0.0] * grid.n))
    fits = holder_study(regime, grid, base, P.int("trial_count", 6), P.int("seed"), P.num("tol", 0.15))
    real = [f for f in fits if not f.vacuous]
    summary = {
        "space_min": min((f.fitted_exponent for f in real if f.direction == "space"), default=math.inf),
        "time_min": min((f.fitted_exponent for f in real if f.direction == "time"), default=math.inf),
        "theory_exponent": fits[0].theory_exponent,
    }
    return Outcome(all(f.passed for f in fits), summary,
                   {"regime": regime.to_record(), "fits": [f.to_record() for f in fits]})


def _compact_set(P: _Params, grid, alpha):
    from .capacity import CompactSet
    from .grid import ParabolicBall

    spec = P.obj("set")
    kind = spec.get("kind")
    S = _Params(dict(spec))
    try:
        if kind == "ball":
            x0 = tuple(S.nums("x0", [0.0] * grid.n))
            return CompactSet.from_ball(grid, ParabolicBall(S.num("t0", positive=True), x0, S.num("r", positive=True), alpha))
        if kind == "box":
            return CompactSet.from_box(grid, tuple(S.nums("t_range", min_len=2)), [tuple(r) for r in spec["x_ranges"]])
        if kind == "point":
            return CompactSet.singleton(grid, S.int("k"), spec["index"])
        if kind == "empty":
            return CompactSet.empty(grid)
    except ConfigError as err:
        raise ConfigError(f"set.{err.field}", str(err).split(": ", 1)[1]) from None
    except (KeyError, TypeError, ValueError, IndexError) as err:
        raise ConfigError("set", str(err)) from None
    raise ConfigError("set.kind", "must be one of ball, box, point, empty")


def _capacity_bracket(P: _Params) -> Outcome:
    from .capacity import capacity_bracket
    from .evolve import make_plan

    alpha, p, q = P.num("alpha", positive=True), P.num("p"), P.num("q")
    grid = P.grid()
    kset = _compact_set(P, grid, alpha)
    res = capacity_bracket(kset, p, q, make_plan(grid, alpha), P.solver())
    gap_tol = P.num("gap_tol", 1e-2)
    ok = res.gap >= -1e-9 and (not (p == 2 and q == 2) or res.relative_gap <= gap_tol)
    summary = {"primal": res.primal_value, "dual": res.dual_value, "relative_gap": res.relative_gap}
    rec = res.to_record()
    return Outcome(bool(ok), summary, rec, nonconverged="not converged" in res.flags, flags=list(res.flags))


def _capacity_scaling(P: _Params) -> Outcome:
    from .capacity.experiments import scaling_experiment

    rep = scaling_experiment(P.num("p"), P.num("q"), P.num("alpha", positive=True), P.n(), P.nums("radii", min_len=3),
                             P.solver(), P.int("cells", 8), P.int("tcells", 8), P.num("tol", 0.1))
    table = (["r", "primal", "dual"], [[row["r"], row["primal"], row["dual"]] for row in rep.rows])
    summary = {"fitted_exponent": rep.fitted_exponent, "beta": rep.beta}
    return Outcome(rep.passed, summary, rep.to_record(), table, _nonconverged(rep.flags), list(rep.flags))


def _capacity_critical(P: _Params) -> Outcome:
    from .capacity.experiments import critical_experiment

    rep = critical_experiment(P.num("p"), P.num("q"), P.num("alpha", positive=True), P.n(), P.nums("radii", min_len=3),
                              P.solver(), P.num("t0", 0.5), P.int("cells", 4), P.int("tcells", 4), P.num("tol", 0.2),
                              P.num("stability", 2.0))
    cols = ["r", "primal", "dual", "extremal_min_SF", "extremal_norm_q", "log_scale"]
    table = (cols, [[row[c] for c in cols] for row in rep.rows])
    summary = {"fitted_exponent": rep.fitted_exponent, "target": rep.target,
               "lower_spread": rep.lower_ratio_spread, "upper_spread": rep.upper_ratio_spread}
    return Outcome(rep.passed, summary, rep.to_record(), table, _nonconverged(rep.flags), list(rep.flags))


def _capacity_axioms(P: _Params) -> Outcome:
    from .capacity.experiments import axiom_suite
    from .evolve import make_plan

    alpha = P.num("alpha", positive=True)
    grid = P.grid()
    rep = axiom_suite(make_plan(grid, alpha), P.num("p"), P.num("q"), P.solver(), P.cfg.get("r"), P.cfg.get("t0"))
    summary = {c["name"]: c["passed"] for c in rep.checks}
    return Outcome(rep.passed, summary, rep.to_record())


def _gauge(P: _Params):
    from .hausdorff import GaugeFn

    g = P.obj("gauge")
    try:
        return GaugeFn(g.get("kind"), g.get("param"))
    except (TypeError, ValueError) as err:
        raise ConfigError("gauge", str(err)) from None


def _hausdorff_content(P: _Params) -> Outcome:
    from .hausdorff import hausdorff_content

    alpha = P.num("alpha", positive=True)
    grid = P.grid()
    kset = _compact_set(P, grid, alpha)
    res = hausdorff_content(kset, _gauge(P), P.num("epsilon", positive=True), P.str("method", "best"), alpha=alpha)
    summary = {"value": res.value, "method": res.method, "lower_bound": res.volume_lower_bound}
    return Outcome(res.verified, summary, res.to_record())


def _comparison(P: _Params) -> Outcome:
    from .hausdorff import comparison_experiment

    n = P.n()
    B = P.cfg.get("B")
    if not isinstance(B, list) or len(B) != n:
        raise ConfigError("B", f"expected {n} spatial intervals")
    rep = comparison_experiment(tuple(P.nums("A", min_len=2)), B, P.num("p"), P.num("q"),
                                P.num("alpha", positive=True), P.num("p_tilde"), P.num("q_tilde"),
                                P.num("delta", positive=True), n=n,
                                shrinks=P.nums("shrinks", [1.0, 0.5, 0.25, 0.125], min_len=3),
                                solver_cfg=P.solver(), cells=P.int("cells", 8), tcells=P.int("tcells", 8),
                                tol=P.num("tol", 0.15))
    table = (list(rep.CSV_COLUMNS), [list(r) for r in rep.csv_rows()])
    summary = dict(rep.slopes, beta=rep.beta)
    return Outcome(rep.passed, summary, rep.to_record(), table, _nonconverged(rep.flags), list(rep.flags))


def _log_gauge(P: _Params) -> Outcome:
    from .hausdorff import log_gauge_experiment

    rep = log_gauge_experiment(P.num("p"), P.num("q"), P.num("alpha", positive=True), P.nums("radii", min_len=3),
                               n=P.n(), epsilon=P.num("epsilon", 0.5), solver_cfg=P.solver(), t0=P.num("t0", 0.5),
                               cells=P.int("cells", 4), tcells=P.int("tcells", 4),
                               slope_bound=P.num("slope_bound", 0.2))
    table = (["r", "capacity", "content", "ratio"], [[r["r"], r["capacity"], r["content"], r["ratio"]] for r in rep.rows])
    summary = {"ratio_slope": rep.ratio_slope, "max_ratio": rep.max_ratio}
    return Outcome(rep.passed, summary, rep.to_record(), table, _nonconverged(rep.flags), list(rep.flags))


def _nonconverged(flags) -> bool:
    return any("not converged" in f for f in flags)


KINDS: dict[str, Callable[[_Params], Outcome]] = {
    "kernel-envelope": _kernel_envelope,
    "strichartz-R": _strichartz_R,
    "strichartz-S": _strichartz_S,
    "continuity": _continuity,
    "exp-integrability": _exp_integrability,
    "holder": _holder,
    "capacity-bracket": _capacity_bracket,
    "capacity-scaling": _capacity_scaling,
    "capacity-critical": _capacity_critical,
    "capacity-axioms": _capacity_axioms,
    "hausdorff-content": _hausdorff_content,
    "comparison": _comparison,
    "log-gauge": _log_gauge,
}

RANDOMIZED = frozenset({"strichartz-R", "strichartz-S", "continuity", "exp-integrability", "holder"})

# fields every kind needs, checked before anything runs
_REQUIRED_FIELDS = {
    "kernel-envelope": ("n", "alpha", "t", "grid"),
    "strichartz-R": ("n", "alpha", "p", "p_tilde", "grid"),
    "strichartz-S": ("n", "alpha", "p", "q", "p_tilde", "q_tilde", "grid"),
    "continuity": ("n", "alpha", "p", "t", "steps", "grid"),
    "exp-integrability": ("n", "alpha", "p", "q", "grid", "ball"),
    "holder": ("n", "alpha", "p", "q", "grid", "base_point"),
    "capacity-bracket": ("n", "alpha", "p", "q", "grid", "set"),
    "capacity-scaling": ("n", "alpha", "p", "q", "radii"),
    "capacity-critical": ("n", "alpha", "p", "q", "radii"),
    "capacity-axioms": ("n", "alpha", "p", "q", "grid"),
    "hausdorff-content": ("n", "alpha", "grid", "set", "gauge", "epsilon"),
    "comparison": ("n", "alpha", "p", "q", "p_tilde", "q_tilde", "A", "B", "delta"),
    "log-gauge": ("n", "alpha", "p", "q", "radii"),
}


def validate(cfg: Any) -> dict:
    """Field-level completeness check; returns a deep copy of the config."""
    if not isinstance(cfg, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    kind = cfg.get("kind")
    if kind not in KINDS:
        raise ConfigError("kind", f"must be one of {sorted(KINDS)}, got {kind!r}")
    for key in _REQUIRED_FIELDS[kind]:
        if key not in cfg:
            raise ConfigError(key, f"required for kind {kind!r}")
    if kind in RANDOMIZED and not isinstance(cfg.get("seed"), int):
        raise ConfigError("seed", f"an integer seed is required for kind {kind!r}")
    return copy.deepcopy(cfg)


def execute(cfg: dict) -> Outcome:
    """Validate then run; library ``ValueError``s surface as :class:`ConfigError`."""
    cfg = validate(cfg)
    try:
        return KINDS[cfg["kind"]](_Params(cfg))
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError(cfg["kind"], str(err)) from err
