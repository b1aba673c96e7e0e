import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lincvx import duality as P
from lincvx.discs import unit_roots

K = P.canonical_system()


def _brute_polar_gauge(system, a, count=10000):
    lam = np.exp(2j * np.pi * np.arange(count) / count)
    pts = np.concatenate([r * lam[:, None] * d[None, :] for r, d in zip(system.radii, system.directions)])
    return np.abs(pts @ np.asarray(a, dtype=complex)).max()


def test_polar_gauge_examples():
    assert P.polar_gauge(K, [0.5, 0.5]) == 0.5
    assert P.polar_gauge(K, [0.5, 0.5]) == pytest.approx(_brute_polar_gauge(K, [0.5, 0.5]), abs=1e-12)
    assert P.polar_gauge(K, [1, 0]) == 1.0
    assert P.polar_gauge(K, [0, 0]) == 0.0


@given(st.complex_numbers(max_magnitude=10), st.complex_numbers(max_magnitude=10),
       st.complex_numbers(max_magnitude=10))
@settings(max_examples=100)
def test_polar_gauge_homogeneity(a1, a2, lam):
    g = P.polar_gauge(K, [a1, a2])
    assert abs(P.polar_gauge(K, [lam * a1, lam * a2]) - abs(lam) * g) <= 1e-12 * max(1.0, abs(lam) * g)


def test_double_polar_examples():
    inside, v = P.double_polar_membership(K, [0.5, 0.5])
    assert inside and v == pytest.approx(1.0, abs=1e-15)
    inside, v = P.double_polar_membership(K, [0.6, 0.6])
    assert not inside and v == pytest.approx(1.2, abs=1e-15)
    assert P.double_polar_membership(K, [0, 0]) == (True, 0.0)


def test_double_polar_against_torus_grid(rng):
    # sup of |a . z| over the closed bidisc is attained on its torus
    phases = np.exp(2j * np.pi * np.arange(256) / 256)
    a = np.stack(np.meshgrid(phases, phases, indexing="ij"), -1).reshape(-1, 2)
    for z in rng.uniform(-1, 1, (20, 2)) + 1j * rng.uniform(-1, 1, (20, 2)):
        grid = np.abs(a @ z).max()
        exact = P.double_polar_membership(K, z)[1]
        assert grid <= exact + 1e-12 and exact - grid < 1e-3


def test_canonical_identity():
    assert P.canonical_identity_error(10000, seed=0) < 1e-9


def test_bipolar_contains_discs():
    systems = [K, *P.random_transformed_systems(5, 3)]
    lam = (np.linspace(0, 1, 20)[:, None] * unit_roots(64)[None, :]).ravel()
    for s in systems:
        for r, d in zip(s.radii, s.directions):
            pts = s.center + r * lam[:, None] * d[None, :]
            assert P.double_polar_values(s, pts).max() <= 1 + 1e-9


def test_convex_hull_examples():
    assert P.convex_hull_membership(K, [0.5, 0.5])
    assert not P.convex_hull_membership(K, [0.8, 0.5])
    assert P.convex_hull_membership(K, [np.exp(0.7j), 0])
    assert P.convex_hull_membership(K, [0, 0])


def test_dependent_directions_reduce_to_a_line():
    s = P.CenteredDiscSystem([0, 0], ([1, 1j], [2, 2j]), (1.0, 0.25))
    assert P.convex_hull_membership(s, [0.5j, -0.5])
    assert not P.convex_hull_membership(s, [1.1, 1.1j])
    assert not P.convex_hull_membership(s, [0.1, 0])
    inside, v = P.double_polar_membership(s, [0.5j, -0.5])
    assert inside and v == pytest.approx(0.5)
    assert P.double_polar_membership(s, [0.1, 0]) == (False, np.inf)


def test_three_disc_system_matches_l1_minimum():
    s = P.CenteredDiscSystem([0, 0], ([1, 0], [0, 1], [1, 1]), (1.0, 1.0, 1.0))
    # (1, 1) is one generator, so its norm is 1 although |z1| + |z2| = 2
    assert P.double_polar_membership(s, [1, 1])[1] == pytest.approx(1.0, abs=1e-6)
    assert P.double_polar_membership(s, [0.5, 0])[1] == pytest.approx(0.5, abs=1e-6)


def test_hulls_coincide_canonical_and_transformed():
    assert P.hulls_coincide_check(K, 10000, seed=0).verdict == "pass"
    rot = P.CenteredDiscSystem([0, 0], (np.array([1, 1]) / np.sqrt(2), np.array([1, -1]) / np.sqrt(2)),
                               (1.0, 1.0))
    assert P.hulls_coincide_check(rot, 2000, seed=1).verdict == "pass"
    for s in P.random_transformed_systems(10, 7):
        rep = P.hulls_coincide_check(s, 2000, seed=2)
        assert rep.verdict == "pass" and rep.details["disagreements"] == 0


def test_single_disc_system():
    s = P.CenteredDiscSystem([0.1, 0], ([1, 1j],), (0.5,))
    assert P.convex_hull_membership(s, [0.1 + 0.3, 0.3j])
    assert not P.convex_hull_membership(s, [0.1 + 0.3, 0])
    assert P.hulls_coincide_check(s, 1000, seed=0).verdict == "pass"


def test_linear_covariance(rng):
    base = P.CenteredDiscSystem([0.2, -0.1j], ([1, 0.3j], [0.2, 1]), (0.8, 1.1))
    z = base.center + rng.uniform(-1.5, 1.5, (300, 2)) + 1j * rng.uniform(-1.5, 1.5, (300, 2))
    ref = P.convex_hull_values(base, z)
    dp = P.double_polar_values(base, z)
    keep = np.abs(dp - 1) > 1e-6
    for _ in range(10):
        L = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        img = base.transformed(L)
        assert np.array_equal(P.convex_hull_values(img, z @ L.T)[keep], ref[keep])


def test_system_validation_and_roundtrip():
    with pytest.raises(P.DualityError):
        P.CenteredDiscSystem([0, 0], (), ())
    with pytest.raises(P.DualityError):
        P.CenteredDiscSystem([0, 0], ([0, 0],), (1.0,))
    with pytest.raises(P.DualityError):
        P.CenteredDiscSystem([0, 0], ([1, 0],), (-1.0,))
    s = P.CenteredDiscSystem([0.1j, 0], ([1, 2j], [0, 1]), (0.5, 2.0))
    back = P.CenteredDiscSystem.from_dict(s.to_dict())
    assert np.array_equal(back.generators, s.generators) and np.array_equal(back.center, s.center)
    with pytest.raises(P.DualityError):
        P.CenteredDiscSystem.from_dict(dict(s.to_dict(), extra=1))
