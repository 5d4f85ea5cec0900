import math

import numpy as np
import pytest

from fracdiss.capacity import CompactSet
from fracdiss.grid import ParabolicBall, make_grid
from fracdiss.hausdorff import (
    BEST,
    DYADIC,
    SINGLE,
    TREE,
    GaugeFn,
    comparison_experiment,
    covers,
    hausdorff_content,
    log_gauge_experiment,
    tile_levels,
)


@pytest.fixture(scope="module")
def g():
    return make_grid(1, 8, 256, 2, 128)


def _ball(g, r, t0=1.0, x0=0.01, alpha=0.5):
    return CompactSet.from_ball(g, ParabolicBall(t0, (x0,), r, alpha))


def test_gauges():
    assert GaugeFn.power(2)(0.5) == 0.25
    assert GaugeFn.power(2)(0.0) == 0.0
    lg = GaugeFn.log_power(1.0)
    assert lg(math.exp(-2)) == pytest.approx(0.5)
    assert lg(1.0) == np.inf
    with pytest.raises(ValueError):
        GaugeFn("cubic", 1.0)
    with pytest.raises(ValueError):
        GaugeFn.power(0)


def test_tile_radii_increase(g):
    radii = [lev.radius for lev in tile_levels(g, 0.5)]
    assert all(a < b for a, b in zip(radii, radii[1:]))


def test_ball_is_covered_by_about_itself(g):
    res = hausdorff_content(_ball(g, 0.5), GaugeFn.power(2), 2.0)
    assert res.verified
    assert res.value <= 0.5**2 * 1.01
    assert res.volume_lower_bound <= res.value


@pytest.mark.parametrize("method", [SINGLE, DYADIC, TREE, BEST])
def test_every_method_covers(g, method):
    K = _ball(g, 0.3).union(_ball(g, 0.2, x0=2.0))
    res = hausdorff_content(K, GaugeFn.power(1.5), 1.5, method=method)
    assert covers(K, res.balls)
    assert all(b.r < 1.5 for b in res.balls)


def test_best_is_smallest_candidate(g):
    K = _ball(g, 0.3).union(_ball(g, 0.3, x0=-2.5))
    res = hausdorff_content(K, GaugeFn.power(2), 3.0)
    assert res.value == min(res.candidates.values())


def test_dyadic_scale_free_for_matching_dimension():
    # a time segment has parabolic dimension 2 alpha = 1 at alpha = 1/2
    vals = []
    for N in (128, 256, 512):
        g = make_grid(1, 8, N, 2, N // 2)
        K = CompactSet.from_box(g, (0.5, 1.5), [(0.0, 0.0)])
        vals.append(hausdorff_content(K, GaugeFn.power(1), 0.2, method=DYADIC, alpha=0.5).value)
    assert max(vals) / min(vals) <= 4


def test_empty_set(g):
    res = hausdorff_content(CompactSet.empty(g), GaugeFn.power(2), 1.0, alpha=0.5)
    assert res.value == 0.0 and res.verified


def test_monotone(g):
    phi = GaugeFn.power(2)
    assert hausdorff_content(_ball(g, 0.2), phi, 1.0).value <= hausdorff_content(_ball(g, 0.4), phi, 1.0).value


def test_tree_is_subadditive(g):
    # the single circumscribing ball is not, which is why this targets the tree
    A, B = _ball(g, 0.2), _ball(g, 0.25, x0=1.5)
    phi = GaugeFn.power(2)
    h = lambda K: hausdorff_content(K, phi, 1.0, method=TREE).value  # noqa: E731
    assert h(A.union(B)) <= h(A) + h(B) + 1e-12


def test_epsilon_and_dimension_monotone(g):
    K = _ball(g, 0.4)
    vals = [hausdorff_content(K, GaugeFn.power(2), eps).value for eps in (2.0, 0.5, 0.1)]
    assert vals[0] <= vals[1] <= vals[2]
    by_d = [hausdorff_content(K, GaugeFn.power(d), 0.5).value for d in (1.0, 1.5, 2.0, 3.0)]
    assert all(a >= b for a, b in zip(by_d, by_d[1:]))


def test_log_gauge_content_decreases_in_gamma(g):
    K = _ball(g, 0.05)
    vals = [hausdorff_content(K, GaugeFn.log_power(gm), 0.5).value for gm in (0.5, 1.0, 2.0)]
    assert vals[0] >= vals[1] >= vals[2] > 0


def test_epsilon_below_resolution(g):
    with pytest.raises(ValueError):
        hausdorff_content(_ball(g, 0.4), GaugeFn.power(2), 1e-4)


def test_alpha_required_without_descriptor(g):
    K = CompactSet.from_box(g, (0.5, 1.0), [(0.0, 0.5)])
    with pytest.raises(ValueError):
        hausdorff_content(K, GaugeFn.power(2), 1.0)


def test_comparison_chain_slopes():
    rep = comparison_experiment((0.5, 1.0), [(-0.5, 0.5)], 2, 2, 0.25, 8, 4, 1.0)
    assert rep.passed


def test_comparison_rejects_bad_exponents():
    with pytest.raises(ValueError):
        comparison_experiment((0.5, 1.0), [(-0.5, 0.5)], 2, 2, 0.25, 3, 3, 1.0)


@pytest.mark.slow
def test_log_gauge_ratio_bounded():
    rep = log_gauge_experiment(2, 2, 0.5, [0.125, 0.0625, 0.03125, 0.015625])
    assert rep.passed
