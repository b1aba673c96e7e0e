import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lincvx import directional as dr
from lincvx import domains as D
from lincvx.points import random_in_ball, random_unit_directions

DELTA = 0.05
MU = math.sqrt(0.1)
Z0 = [-DELTA, 0]


def test_ray_exit_examples(ball):
    for theta in (0.0, 1.0, 2.5, -0.7):
        assert dr.ray_exit_distance(ball, [0, 0], [1, 0], theta) == pytest.approx(1, abs=1e-12)
    assert dr.ray_exit_distance(ball, [0.5, 0], [1, 0], 0.0) == pytest.approx(0.5, abs=1e-12)
    assert dr.ray_exit_distance(ball, [0.5, 0], [1, 0], math.pi) == pytest.approx(1.5, abs=1e-12)


def test_ray_exit_is_periodic(ellipsoid, rng):
    z = [0.1 + 0.05j, -0.2j]
    X = [0.3 - 0.4j, 0.5 + 0.1j]
    for theta in rng.uniform(0, 2 * np.pi, 10):
        a = dr.ray_exit_distance(ellipsoid, z, X, theta)
        b = dr.ray_exit_distance(ellipsoid, z, X, theta + 2 * np.pi)
        assert a == pytest.approx(b, rel=1e-12)


def test_directional_distance_examples(ball, model):
    assert dr.directional_distance(ball, [0.5, 0], [1, 0]) == pytest.approx(0.5, rel=1e-8)
    assert dr.directional_distance(ball, [0.5, 0], [0, 1]) == pytest.approx(math.sqrt(3) / 2, rel=1e-8)
    assert dr.directional_distance(model, Z0, [2 * DELTA, 0]) == pytest.approx(0.5, rel=1e-8)


def test_model_exit_matches_root_of_restriction(model):
    # Along z = -d + 2 d t (real t) rho_c becomes -d + 2 d t + c d^2 (2t - 1)^2.
    c, d = 1.0, DELTA
    roots = np.roots([4 * c * d * d, 2 * d - 4 * c * d * d, -d + c * d * d])
    t = min(r.real for r in roots if r.real > 0)
    assert t == pytest.approx(0.5, abs=1e-15)
    assert dr.ray_exit_distance(model, Z0, [2 * d, 0], 0.0) == pytest.approx(t, rel=1e-12)


def test_refined_minimum_below_coarse_grid(ellipsoid, rng):
    z = [0.1, 0.2j]
    for X in random_unit_directions(rng, 5, 2):
        coarse = dr.exit_profile(ellipsoid, z, X, 2 * np.pi * np.arange(dr.THETA_GRID) / dr.THETA_GRID)
        assert dr.directional_distance(ellipsoid, z, X) <= coarse.min() + 1e-15


def test_gauge_examples(ball, model):
    assert dr.minkowski_gauge(ball, [0, 0], [1, 0]) == pytest.approx(1, rel=1e-10)
    assert dr.minkowski_gauge(model, Z0, [0.1, 0]) == pytest.approx(2, rel=1e-8)
    with pytest.raises(dr.InvalidDirectionError):
        dr.minkowski_gauge(ball, [0, 0], [0, 0])


def test_not_interior_rejected(ball):
    with pytest.raises(dr.NotInteriorError):
        dr.directional_distance(ball, [1, 0], [0, 1])


def test_unbounded_direction_gives_zero_gauge():
    # |x1| < 1 in C^2 contains every complex line in the w direction
    dom = D.custom(["sub", ["pow", "x1", 2], 1], (0, 0, 0, 0), 1.0)
    assert math.isinf(dr.directional_distance(dom, [0, 0], [0, 1]))
    assert dr.minkowski_gauge(dom, [0, 0], [0, 1]) == 0.0


def test_homogeneity_for_two_i(ellipsoid, rng):
    z = random_in_ball(rng, 100, 2, 0.3)
    X = rng.standard_normal((100, 2)) + 1j * rng.standard_normal((100, 2))
    for zi, Xi in zip(z, X):
        g = dr.minkowski_gauge(ellipsoid, zi, Xi)
        assert abs(dr.minkowski_gauge(ellipsoid, zi, 2j * Xi) - 2 * g) < 1e-8 * g


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.05, 5), st.floats(0, 2 * math.pi))
@settings(max_examples=40, deadline=None)
def test_homogeneity_property(a, b, mod, arg):
    dom = D.perturbed_ball(1.0, 0.4, 0.3)
    X = np.array([a + 0.3j, 0.2 - b * 1j])
    lam = mod * np.exp(1j * arg)
    g = dr.minkowski_gauge(dom, [0.1j, 0.05], X)
    assert abs(dr.minkowski_gauge(dom, [0.1j, 0.05], lam * X) - mod * g) < 1e-8 * max(g, 1e-300) * mod


def test_exit_consistency_at_minimizing_phase(ellipsoid, rng):
    z = random_in_ball(rng, 30, 2, 0.3)
    X = random_unit_directions(rng, 30, 2)
    thetas = 2 * np.pi * np.arange(4096) / 4096
    for zi, Xi in zip(z, X):
        d = dr.directional_distance(ellipsoid, zi, Xi)
        prof = dr.exit_profile(ellipsoid, zi, Xi, thetas)[0]
        phase = np.exp(1j * thetas[np.argmin(prof)])
        assert D.membership(ellipsoid, zi + 0.999 * d * phase * Xi, 1e-9) == "inside"
        # the dense-grid phase is within 1e-3 of the minimizing one
        assert D.membership(ellipsoid, zi + 1.001 * d * phase * Xi, 1e-9) != "inside" or \
            prof.min() > 1.001 * d


def test_subadditivity_ball(ball):
    rep = dr.gauge_subadditivity_check(ball, [0.3, 0.1 + 0.2j], trials=2000, seed=0)
    assert rep.verdict == "pass" and rep.worst_margin >= -1e-9


def test_subadditivity_directed_pair_on_model(model):
    X, Y = [DELTA, DELTA / MU], [DELTA, -DELTA / MU]
    assert dr.minkowski_gauge(model, Z0, np.add(X, Y)) == pytest.approx(2, rel=1e-8)
    rep = dr.gauge_subadditivity_check(model, Z0, pairs=[(X, Y)])
    assert rep.verdict == "fail" and rep.worst_margin < -1e-3
    assert rep.witness["gauge_X"] + rep.witness["gauge_Y"] < 2


def test_equal_pair_margin_vanishes(ellipsoid, rng):
    X = random_unit_directions(rng, 20, 2)
    rep = dr.gauge_subadditivity_check(ellipsoid, [0.1, 0.0], pairs=[(x, x) for x in X])
    assert np.abs(rep.margins).max() <= 1e-9


def test_indicatrix_examples(ball, model):
    assert dr.indicatrix_midpoint_check(ball, [0, 0], trials=500, seed=2).verdict == "pass"
    w1, w2 = [0, DELTA / MU], [0, -DELTA / MU]
    assert dr.indicatrix_midpoint_margin(model, Z0, w1, w2) <= 0
    assert dr.indicatrix_midpoint_check(model, Z0, points=[(w1, w2)]).verdict == "fail"
    same = dr.indicatrix_midpoint_check(ball, [0.2, 0], points=[([0.2, 0], [0.2, 0])])
    assert same.verdict == "pass" and same.worst_margin == 1.0


def test_explicit_points_outside_indicatrix_rejected(ball):
    with pytest.raises(ValueError):
        dr.indicatrix_midpoint_check(ball, [0, 0], points=[([1.5, 0], [0, 0])])


@pytest.mark.parametrize("seed", range(4))
def test_gauge_and_indicatrix_verdicts_agree(seed, model, ellipsoid):
    for dom, z in ((model, Z0), (ellipsoid, [0.1, 0.0]), (model, [-0.1, 0.05j])):
        a = dr.gauge_subadditivity_check(dom, z, trials=400, seed=seed)
        b = dr.indicatrix_midpoint_check(dom, z, trials=400, seed=seed)
        assert a.verdict == b.verdict


def test_workers_do_not_change_results(model):
    a = dr.gauge_subadditivity_check(model, Z0, trials=300, seed=5, workers=1)
    b = dr.gauge_subadditivity_check(model, Z0, trials=300, seed=5, workers=3)
    assert a.verdict == b.verdict and a.worst_margin == b.worst_margin
    assert np.array_equal(a.margins, b.margins)
