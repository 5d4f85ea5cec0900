import numpy as np
import pytest

from fracdiss.evolve import (
    adjoint_duhamel,
    adjoint_duhamel_all,
    apply_fractional_laplacian_semigroup,
    apply_semigroup,
    duhamel,
    duhamel_all,
    make_plan,
)
from fracdiss.grid import SLICE, Field, integrate_slice, make_grid
from fracdiss.kernel import poisson_kernel
from fracdiss.trials import spike


def _inner(g, F, G):
    w = g.time_weights.reshape((-1,) + (1,) * g.n) * g.cell_volume
    return float(np.sum(w * F * G))


@pytest.fixture
def small():
    return make_grid(1, 4, 16, 1, 6)


def test_identity_at_time_zero(small):
    plan = make_plan(small, 0.4)
    f = Field(small, np.random.default_rng(0).standard_normal(16), SLICE)
    np.testing.assert_array_equal(apply_semigroup(plan, f, 0.0).values, f.values)
    with pytest.raises(ValueError):
        apply_semigroup(plan, f, -0.1)


def test_spike_evolves_into_poisson_kernel():
    g = make_grid(1, 64, 2048, 1, 2)
    plan = make_plan(g, 0.5)
    f = Field(g, spike(g, (0.5,)), SLICE)
    out = apply_semigroup(plan, f, 1.0).values
    x0 = g.x[g.N // 2]
    win = np.abs(g.x - x0) <= 4
    # torus images of the heavy tail sit at distance L
    np.testing.assert_allclose(out[win], poisson_kernel(1.0, g.x[win] - x0, 1), atol=2e-3)
    assert integrate_slice(Field(g, out, SLICE)) == pytest.approx(1.0, abs=1e-10)


def test_semigroup_law(small):
    plan = make_plan(small, 0.7)
    f = Field(small, np.random.default_rng(1).standard_normal(16), SLICE)
    a = apply_semigroup(plan, apply_semigroup(plan, f, 0.3), 0.45)
    np.testing.assert_allclose(a.values, apply_semigroup(plan, f, 0.75).values, atol=1e-14)


def test_fractional_laplacian_kills_constants_and_scales_modes():
    g = make_grid(1, 2 * np.pi, 32, 1, 2)
    plan = make_plan(g, 0.75)
    assert np.abs(apply_fractional_laplacian_semigroup(plan, Field(g, np.ones(32), SLICE), 0.5).values).max() < 1e-14
    k = 3.0
    cos = Field(g, np.cos(k * g.x), SLICE)
    out = apply_fractional_laplacian_semigroup(plan, cos, 0.2).values
    lam = k**1.5
    np.testing.assert_allclose(out, lam * np.exp(-0.2 * lam) * cos.values, atol=1e-12)
    with pytest.raises(ValueError):
        apply_fractional_laplacian_semigroup(plan, cos, 0.0)


def test_duhamel_of_zero_and_at_time_zero(small):
    plan = make_plan(small, 0.5)
    assert not duhamel(plan, Field.zeros(small), 4).values.any()
    F = Field(small, np.ones(small.shape))
    assert not duhamel(plan, F, 0).values.any()


def test_duhamel_time_independent_mode():
    g = make_grid(1, 2 * np.pi, 16, 1.0, 400)
    plan = make_plan(g, 0.5)
    k = 2.0
    F = Field(g, np.broadcast_to(np.cos(k * g.x), g.shape))
    lam = k
    exact = (1 - np.exp(-g.T * lam)) / lam * np.cos(k * g.x)
    np.testing.assert_allclose(duhamel(plan, F, g.M).values, exact, atol=1e-5)


def test_recursion_matches_direct_sum(small):
    plan = make_plan(small, 0.3)
    F = Field(small, np.random.default_rng(2).standard_normal(small.shape))
    full = duhamel_all(plan, F).values
    for k in range(small.M + 1):
        np.testing.assert_allclose(full[k], duhamel(plan, F, k).values, atol=1e-13)
    back = adjoint_duhamel_all(plan, F).values
    for k in range(small.M + 1):
        np.testing.assert_allclose(back[k], adjoint_duhamel(plan, F, k).values, atol=1e-13)


def test_adjoint_identity_on_random_fields():
    g = make_grid(2, 4, 8, 1, 5)
    plan = make_plan(g, 0.6)
    rng = np.random.default_rng(3)
    F, G = rng.standard_normal(g.shape), rng.standard_normal(g.shape)
    lhs = _inner(g, plan.forward(F), G)
    rhs = _inner(g, F, plan.adjoint(G))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_materialized_matrices_are_transposes(small):
    plan = make_plan(small, 0.5)
    size = int(np.prod(small.shape))
    eye = np.eye(size).reshape((size,) + small.shape)
    A = np.stack([plan.forward(e).ravel() for e in eye], axis=1)
    B = np.stack([plan.adjoint(e).ravel() for e in eye], axis=1)
    w = np.broadcast_to(small.time_weights[:, None] * small.cell_volume, small.shape).ravel()
    # <A F, G>_W = <F, B G>_W  <=>  W A = (W B)^T
    assert np.max(np.abs(w[:, None] * A - (w[:, None] * B).T)) <= 1e-12


def test_adjoint_at_horizon_is_one_endpoint_weight(small):
    plan = make_plan(small, 0.5)
    G = Field(small, np.ones(small.shape))
    np.testing.assert_allclose(adjoint_duhamel(plan, G, small.M).values, 0.5 * small.dt, rtol=1e-13)


def test_positivity_preserved():
    g = make_grid(1, 8, 64, 1, 8)
    plan = make_plan(g, 0.5)
    F = np.abs(np.random.default_rng(4).standard_normal(g.shape))
    assert plan.forward(F).min() >= -1e-8


def test_plan_rejects_other_grid(small):
    plan = make_plan(small, 0.5)
    other = make_grid(1, 4, 32, 1, 6)
    with pytest.raises(ValueError):
        duhamel(plan, Field.zeros(other), 1)
