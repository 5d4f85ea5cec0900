import math

import numpy as np
import pytest

from fracdiss.grid import SLICE, Field, make_grid
from fracdiss.norms import (
    MixedExponents,
    conjugate,
    fit_scaling,
    lp_norm,
    mixed_norm,
    smoothing_decay,
    strichartz_q_tilde,
    strichartz_ratio_R,
    strichartz_ratio_S,
    strichartz_relation_residual,
)


def test_conjugates():
    assert conjugate(2) == 2
    assert conjugate(1) == math.inf
    assert conjugate(math.inf) == 1
    e = MixedExponents(3, 1.5)
    assert (e.p_dual, e.q_dual, e.power) == (1.5, 3.0, 1.5)
    with pytest.raises(ValueError):
        MixedExponents(2, 1)


def test_indicator_of_unit_square_has_norm_one():
    # x in [0, 1): cells 16..31 on [-1, 1) with N=32; t in [0, 1] with M=8
    g = make_grid(1, 2, 32, 1, 8)
    F = np.zeros(g.shape)
    F[:, 16:] = 1.0
    for p, q in [(1, 2), (2, 2), (3, 1.5), (math.inf, 4)]:
        assert mixed_norm(Field(g, F), p, q) == pytest.approx(1.0)


def test_product_field_factorizes():
    g = make_grid(1, 2, 64, 1, 64)
    a = 1 + g.t**2
    b = np.cos(np.pi * g.x) ** 2
    F = Field(g, a[:, None] * b[None])
    p, q = 3.0, 2.0
    na = float(np.dot(g.time_weights, a**q) ** (1 / q))
    nb = lp_norm(Field(g, b, SLICE), p)
    assert mixed_norm(F, p, q) == pytest.approx(na * nb, rel=1e-12)


def test_homogeneity_and_absolute_value():
    g = make_grid(1, 4, 16, 1, 4)
    F = Field(g, np.random.default_rng(0).standard_normal(g.shape))
    assert mixed_norm(-3 * F, 2.5, 3) == pytest.approx(3 * mixed_norm(F, 2.5, 3))
    assert mixed_norm(abs(F), 1.5, 2) == mixed_norm(F, 1.5, 2)


def test_zero_iff_zero_field():
    g = make_grid(1, 4, 16, 1, 4)
    assert mixed_norm(Field.zeros(g), 2, 2) == 0
    F = np.zeros(g.shape)
    F[2, 3] = 1e-30
    assert mixed_norm(Field(g, F), 2, 2) > 0


def test_fit_scaling_recovers_power_law():
    fit = fit_scaling([1, 0.5, 0.25, 0.125], [3 * r**1.7 for r in [1, 0.5, 0.25, 0.125]])
    assert fit.fitted_exponent == pytest.approx(1.7)
    assert fit.r_squared == pytest.approx(1.0)
    with pytest.raises(ValueError):
        fit_scaling([0.5, 1, 0.25], [1, 2, 3])


def test_q_tilde_from_relation():
    q, flags = strichartz_q_tilde(1, 0.5, 1, 2)
    assert q == 2 and flags
    assert strichartz_q_tilde(1, 0.25, 2, 2)[0] == math.inf
    with pytest.raises(ValueError):
        strichartz_q_tilde(1, 0.25, 1, 3)  # p~ < np/(n - 2a) = 2


def test_relation_guard():
    assert strichartz_relation_residual(1, 0.5, 1, 2, 2, 4) == pytest.approx(-0.25)
    g = make_grid(1, 8, 64, 2, 32)
    with pytest.raises(ValueError):
        strichartz_ratio_S(0.5, 1, 2, 2, 4, g)
    assert strichartz_relation_residual(1, 0.5, 1, 4 / 3, 2, 4) == 0


def test_contraction_case_ratio_at_most_one():
    g = make_grid(1, 8, 128, 2, 32)
    for p in (1, 2, 3):
        rep = strichartz_ratio_R(0.5, p, p, g, trial_count=9, seed=1)
        assert rep.ratio <= 1 + 1e-9


def test_ratio_R_is_seeded_and_finite():
    g = make_grid(1, 8, 128, 2, 64)
    a = strichartz_ratio_R(0.5, 1, 2, g, trial_count=6, seed=5)
    b = strichartz_ratio_R(0.5, 1, 2, g, trial_count=6, seed=5)
    assert a.ratio == b.ratio and 0 < a.ratio < np.inf
    assert a.to_record()["seed"] == 5


def test_ratio_S_refinement_stable():
    coarse = make_grid(1, 8, 128, 2, 64)
    fine = make_grid(1, 8, 256, 2, 128)
    args = (0.5, 1, 4 / 3, 2, 4)
    a = strichartz_ratio_S(*args, coarse, trial_count=9, seed=0).ratio
    b = strichartz_ratio_S(*args, fine, trial_count=9, seed=0).ratio
    assert abs(b / a - 1) < 0.1


@pytest.mark.parametrize("r", [0.5, 2.0])
def test_ratios_invariant_under_parabolic_rescaling(r):
    g = make_grid(1, 8, 128, 2, 64)
    s = g.rescaled(r, 0.5)
    a = strichartz_ratio_R(0.5, 1, 2, g, trial_count=6, seed=2).ratio
    b = strichartz_ratio_R(0.5, 1, 2, s, trial_count=6, seed=2).ratio
    assert abs(b / a - 1) < 0.15
    c = strichartz_ratio_S(0.5, 1.5, 1.5, 6, 6, g, trial_count=6, seed=2).ratio
    d = strichartz_ratio_S(0.5, 1.5, 1.5, 6, 6, s, trial_count=6, seed=2).ratio
    assert abs(d / c - 1) < 0.15


def test_smoothing_decay_heat():
    rep = smoothing_decay(1.0, make_grid(1, 32, 512, 1, 2), [0.25, 0.5, 1, 2])
    assert rep.passed
    assert rep.fit.fitted_exponent == pytest.approx(-1.5, rel=1e-3)
