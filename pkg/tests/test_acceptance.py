"""Acceptance criteria 1-12.

Each test prints ``criterion N: PASS|FAIL  <detail>`` and the lines are
repeated in the terminal summary.  Run just this file with::

    python3 -m pytest tests/test_acceptance.py -v
"""

import io
import math

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from fracdiss.capacity import CompactSet, ConstraintOperator, capacity_bracket, materialize_operator
from fracdiss.capacity.experiments import axiom_suite, critical_experiment, scaling_experiment
from fracdiss.cli import load_manifest, run_config, verify_all
from fracdiss.evolve import make_plan
from fracdiss.grid import ParabolicBall, make_grid
from fracdiss.hausdorff import comparison_experiment, log_gauge_experiment
from fracdiss.kernel import heat_kernel, min_resolvable_time, poisson_kernel, spectral_kernel
from fracdiss.norms import smoothing_decay, strichartz_ratio_R, strichartz_ratio_S
from fracdiss.regularity import classify, exp_integrability_study, holder_study
from fracdiss.runner import execute


def report(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    assert ok, line


def _refined(g):
    return make_grid(g.n, g.L, 2 * g.N, g.T, 2 * g.M)


def test_criterion_01_kernel_oracles():
    g = make_grid(1, 32, 512, 1, 2)
    win = np.abs(g.x) <= g.L / 4
    worst_rel, worst_mass, worst_self = 0.0, 0.0, 0.0
    for alpha, exact in ((0.5, poisson_kernel), (1.0, heat_kernel)):
        for t in (0.5, 1.0, 2.0):
            # t = 1/2 sits just under the truncation guard at alpha = 1/2
            ks = spectral_kernel(alpha, t, g, waive_guard=t < min_resolvable_time(alpha, g))
            ref = exact(t, g.x[win], 1)
            worst_rel = max(worst_rel, float(np.max(np.abs(ks.values[win] - ref) / ref)))
            worst_mass = max(worst_mass, abs(ks.total_mass - 1))
    # K_{s^(2a) t}(s x) = s^-n K_t(x) with s = 2 keeps the sample points on the grid
    mid = g.N // 2
    m = np.arange(-g.N // 8, g.N // 8 + 1)
    for alpha in (0.5, 0.75, 1.0):
        t = max(1.0, min_resolvable_time(alpha, g))
        k1 = spectral_kernel(alpha, t, g).values
        k2 = spectral_kernel(alpha, 2 ** (2 * alpha) * t, g).values
        worst_self = max(worst_self, float(np.max(np.abs(k2[mid + 2 * m] - k1[mid + m] / 2) / (k1[mid + m] / 2))))
    ok = worst_rel <= 1e-3 and worst_mass <= 1e-6 and worst_self <= 1e-4
    report(1, ok, f"max rel err {worst_rel:.2e}, mass err {worst_mass:.1e}, self-similarity {worst_self:.1e}")


def test_criterion_02_envelope():
    rows = []
    for n, N in ((1, 512), (2, 128)):
        g = make_grid(n, 32, N, 1, 2)
        for alpha in (0.25, 0.5, 0.75):
            t = max(1.0, 2.0 ** math.ceil(math.log2(min_resolvable_time(alpha, g))))
            out = execute({"kind": "kernel-envelope", "n": n, "alpha": alpha, "t": t, "grid": {"L": 32, "N": N}})
            rows.append((n, alpha, out.passed, out.summary["relative_change"]))
    ok = all(r[2] for r in rows)
    report(2, ok, "worst change under doubling " + f"{max(r[3] for r in rows):.2e}" + f" over {len(rows)} cases")


def test_criterion_03_smoothing_exponent():
    fits = []
    for n, N in ((1, 1024), (2, 256)):
        g = make_grid(n, 32, N, 1, 2)
        for alpha in (0.5, 0.75, 1.0):
            rep = smoothing_decay(alpha, g, (0.25, 0.5, 1.0, 2.0))
            fits.append((rep.passed, abs(rep.fit.fitted_exponent / rep.theory_exponent - 1)))
    report(3, all(f[0] for f in fits), f"worst relative slope error {max(f[1] for f in fits):.2e}")


def test_criterion_04_strichartz_refinement():
    g = make_grid(1, 8, 256, 4, 128)
    changes = []
    for fn in (lambda h: strichartz_ratio_R(0.5, 1, 2, h, 12, 0),
               lambda h: strichartz_ratio_S(0.5, 1, 4 / 3, 2, 4, h, 12, 0),
               lambda h: strichartz_ratio_S(0.5, 1.5, 1.5, 6, 6, h, 12, 0)):
        a, b = fn(g).ratio, fn(_refined(g)).ratio
        changes.append(abs(b / a - 1) if 0 < a < math.inf else math.inf)
    report(4, max(changes) < 0.1, "changes " + ", ".join(f"{c:.3f}" for c in changes))


def test_criterion_05_duality():
    small = make_grid(1, 4, 32, 1, 8)
    plan = make_plan(small, 0.5)
    instances = []
    for K in (CompactSet.singleton(small, 4, 16), CompactSet.from_box(small, (0.5, 0.75), [(-0.25, 0.25)]),
              CompactSet.from_ball(small, ParabolicBall(0.5, (0.0625,), 0.3, 0.5))):
        for p, q in ((2, 2), (1.5, 3), (3, 1.5), (1, 2)):
            res = capacity_bracket(K, p, q, plan)
            instances.append(res.dual_value <= res.primal_value * (1 + 1e-12))
    K = CompactSet.singleton(small, 4, 16)
    op = ConstraintOperator(plan, K)
    a = op.adjoint(np.ones(1))
    oracle = 1.0 / op.inner(a, a)
    single = capacity_bracket(K, 2, 2, plan, {"tol": 1e-8, "max_iter": 20000})
    oracle_err = max(abs(single.primal_value / oracle - 1), abs(single.dual_value / oracle - 1))
    gaps = []
    for alpha, N, M in ((0.25, 128, 64), (0.5, 128, 64)):
        g = make_grid(1, 8, N, 2, M)
        ball = CompactSet.from_ball(g, ParabolicBall(1.0, (g.dx / 4,), 0.5, alpha))
        gaps.append(capacity_bracket(ball, 2, 2, make_plan(g, alpha)).relative_gap)
    ok = all(instances) and max(gaps) <= 1e-2 and oracle_err <= 1e-6
    report(5, ok, f"weak duality {sum(instances)}/{len(instances)}, ball gaps {max(gaps):.1e}, "
                  f"singleton err {oracle_err:.1e}")


def test_criterion_06_capacity_axioms():
    g = make_grid(1, 8, 128, 2, 64)
    rep = axiom_suite(make_plan(g, 0.25), 2, 2)
    trans = next(c for c in rep.checks if c["name"] == "translation")
    detail = ", ".join(f"{c['name']}={'ok' if c['passed'] else 'no'}" for c in rep.checks)
    report(6, rep.passed, f"{detail}; translation change {max(trans['primal_change'], trans['dual_change']):.1e}")


@pytest.mark.slow
def test_criterion_07_supercritical_scaling():
    fits = []
    for alpha, p, q in ((0.25, 2, 2), (0.5, 1, 2)):
        rep = scaling_experiment(p, q, alpha, 1, (1, 0.5, 0.25, 0.125))
        fits.append((rep.passed, rep.fitted_exponent, rep.beta))
    report(7, all(f[0] for f in fits), "; ".join(f"fit {f[1]:.4f} vs beta {f[2]:.4f}" for f in fits))


def test_criterion_08_critical_log_law():
    rep = critical_experiment(2, 2, 0.5, 1, (0.125, 0.0625, 0.03125, 0.015625))
    report(8, rep.passed, f"fit {rep.fitted_exponent:.3f} vs -1, ratio spreads "
                          f"{rep.lower_ratio_spread:.2f}/{rep.upper_ratio_spread:.2f}")


def test_criterion_09_exp_integrability():
    regime = classify(1, 0.5, 2, 2)
    study = exp_integrability_study(regime, make_grid(1, 8, 256, 2, 128), ParabolicBall(1.0, (0.0,), 1.0, 0.5))
    finite = all(np.isfinite(c) for row in study.trials for c in row["C_star"])
    report(9, study.passed and finite, f"max dyadic step change {study.max_step_change} over {len(study.trials)} trials")


def test_criterion_10_holder():
    fits = holder_study(classify(1, 0.5, 4, 4), make_grid(1, 8, 512, 4, 256), (2.0, 0.0))
    space = min(f.fitted_exponent for f in fits if f.direction == "space")
    time = min(f.fitted_exponent for f in fits if f.direction == "time")
    ok = space >= 0.85 * 0.5 and time >= 0.85 * 0.5 and all(f.passed for f in fits)
    report(10, ok, f"min space exponent {space:.3f}, min time exponent {time:.3f} (theory 0.5)")


def test_criterion_11_comparison_chain():
    comp = comparison_experiment((0.5, 1.0), [(-0.5, 0.5)], 2, 2, 0.25, 8, 4, 1.0)
    logg = log_gauge_experiment(2, 2, 0.5, (0.125, 0.0625, 0.03125, 0.015625))
    report(11, comp.passed and logg.passed,
           f"comparison slopes {', '.join(f'{s:.3f}' for s in comp.slopes.values())}; "
           f"log-gauge ratio slope {logg.ratio_slope:.3f}, max ratio {logg.max_ratio:.2f}")


def test_criterion_12_infrastructure(tmp_path):
    g = make_grid(1, 8, 64, 1, 16)
    plan = make_plan(g, 0.5)
    K = CompactSet.from_ball(g, ParabolicBall(0.5, (g.dx / 2,), 0.5, 0.5))
    op = materialize_operator(plan, K)
    rng = np.random.default_rng(0)
    F, mu = rng.standard_normal(g.shape), rng.standard_normal(K.count)
    adj = abs(op.forward(F) @ mu - op.inner(F, op.adjoint(mu))) / max(1.0, abs(op.forward(F) @ mu))
    cfg, _ = load_manifest("default")
    entry = next(e for e in cfg["experiments"] if e["name"] == "scaling")
    run_config(entry["config"], tmp_path / "a")
    run_config(entry["config"], tmp_path / "b")
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
               for f in ("results.json", "results.csv", "verdict.json"))
    code = verify_all(cfg, stream=io.StringIO())
    report(12, adj <= 1e-12 and same and code == 0,
           f"adjointness {adj:.1e}, byte-identical reruns {same}, verify exit {code}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v"]))
