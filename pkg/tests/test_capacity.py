import numpy as np
import pytest

from fracdiss.capacity import (
    BudgetExceeded,
    CompactSet,
    ConstraintOperator,
    capacity_bracket,
    dual_capacity,
    materialize_operator,
    primal_capacity,
)
from fracdiss.capacity.experiments import axiom_suite
from fracdiss.capacity.solvers import lower_bound_of, upper_bound_of
from fracdiss.evolve import make_plan
from fracdiss.grid import ParabolicBall, make_grid
from fracdiss.norms import mixed_norm_values


@pytest.fixture(scope="module")
def tiny():
    g = make_grid(1, 4, 32, 1, 8)
    return g, make_plan(g, 0.5)


def test_singleton_matches_closed_form(tiny):
    g, plan = tiny
    K = CompactSet.singleton(g, 4, 16)
    op = ConstraintOperator(plan, K)
    a = op.adjoint(np.ones(1))  # representer of F -> (S F)(z) in the W inner product
    oracle = 1.0 / op.inner(a, a)
    res = capacity_bracket(K, 2, 2, plan, {"tol": 1e-8, "max_iter": 20000})
    assert res.primal_value == pytest.approx(oracle, rel=1e-6)
    assert res.dual_value == pytest.approx(oracle, rel=1e-6)


def test_singleton_bracket_for_other_exponents(tiny):
    g, plan = tiny
    res = capacity_bracket(CompactSet.singleton(g, 6, 3), 1.5, 3, plan)
    assert 0 < res.dual_value <= res.primal_value
    assert res.relative_gap < 0.05


def test_empty_set_is_zero(tiny):
    g, plan = tiny
    K = CompactSet.empty(g)
    assert capacity_bracket(K, 2, 2, plan).primal_value == 0.0
    assert primal_capacity(K, 2, 3, plan).value == 0.0
    assert dual_capacity(K, 2, 3, plan).value == 0.0


@pytest.mark.parametrize("p,q", [(2, 2), (1.5, 2), (3, 1.5), (1, 2)])
def test_weak_duality(tiny, p, q):
    g, plan = tiny
    K = CompactSet.from_box(g, (0.5, 0.75), [(-0.25, 0.25)])
    res = capacity_bracket(K, p, q, plan, {"max_iter": 400, "dual_max_iter": 400})
    assert res.dual_value <= res.primal_value * (1 + 1e-12)


def test_bounds_are_certified_by_their_certificates(tiny):
    g, plan = tiny
    K = CompactSet.from_box(g, (0.5, 0.75), [(-0.25, 0.25)])
    op = ConstraintOperator(plan, K)
    res = capacity_bracket(K, 2, 3, plan, {"max_iter": 600})
    assert op.forward(res.F_star.values).min() >= 1 - 1e-9
    norm = mixed_norm_values(res.F_star.values, g, 2, 3)
    assert norm ** 2 == pytest.approx(res.primal_value, rel=1e-9)
    lo, _, G = lower_bound_of(op, res.mu_star.weights, 2, 3)
    assert lo ** 2 == pytest.approx(res.dual_value, rel=1e-9)
    assert mixed_norm_values(G, g, 2, 1.5) == pytest.approx(1.0, rel=1e-9)


def test_upper_bound_of_infeasible_candidate(tiny):
    g, plan = tiny
    op = ConstraintOperator(plan, CompactSet.singleton(g, 4, 16))
    value, F = upper_bound_of(op, -np.ones(g.shape), 2, 2)
    assert value == np.inf and F is None


def test_materialized_operator_is_adjoint(tiny):
    g, plan = tiny
    K = CompactSet.from_ball(g, ParabolicBall(0.5, (0.0625,), 0.4, 0.5))
    dense = materialize_operator(plan, K)
    free = ConstraintOperator(plan, K)
    rng = np.random.default_rng(3)
    F = rng.standard_normal(g.shape)
    mu = rng.standard_normal(K.count)
    assert np.max(np.abs(dense.forward(F) - free.forward(F))) <= 1e-12 * np.abs(free.forward(F)).max()
    lhs = dense.forward(F) @ mu
    rhs = dense.inner(F, dense.adjoint(mu))
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_materialized_rows_are_unit_responses(tiny):
    g, plan = tiny
    K = CompactSet.singleton(g, 5, 10)
    A = materialize_operator(plan, K).matrix
    E = np.zeros(g.shape)
    E[2, 12] = 1.0
    assert A[0, np.ravel_multi_index((2, 12), g.shape)] == pytest.approx(plan.forward(E)[5, 10], abs=1e-14)


def test_budget(tiny):
    g, plan = tiny
    K = CompactSet.from_box(g, (0.25, 1.0), [(-1, 1)])
    with pytest.raises(BudgetExceeded):
        materialize_operator(plan, K, budget=100)
    assert materialize_operator(plan, K, budget=100, matrix_free=True).matrix is None


def test_ball_gap_p_q_two():
    g = make_grid(1, 8, 128, 2, 64)
    plan = make_plan(g, 0.25)
    K = CompactSet.from_ball(g, ParabolicBall(1.0, (0.03125,), 0.5, 0.25))
    res = capacity_bracket(K, 2, 2, plan)
    assert res.relative_gap <= 1e-2


def test_rejects_bad_exponents(tiny):
    g, plan = tiny
    K = CompactSet.singleton(g, 4, 16)
    with pytest.raises(ValueError):
        capacity_bracket(K, 0.5, 2, plan)
    with pytest.raises(ValueError):
        capacity_bracket(K, 2, 1, plan)


def test_set_algebra(tiny):
    g, _ = tiny
    A = CompactSet.singleton(g, 3, 4)
    B = CompactSet.singleton(g, 5, 9)
    U = A.union(B)
    assert A.issubset(U) and B.issubset(U) and U.count == 2
    assert A.translate((5,)).issubset(CompactSet.singleton(g, 3, 9))
    with pytest.raises(ValueError):
        CompactSet(g, np.ones(g.shape, dtype=bool))


def test_axiom_suite():
    g = make_grid(1, 8, 128, 2, 64)
    report = axiom_suite(make_plan(g, 0.25), 2, 2)
    assert report.passed, report.checks
