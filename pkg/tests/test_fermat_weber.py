import numpy as np
import pytest
from scipy.optimize import minimize

from fwguide.fermat_weber import brute_force, existence_check, in_convex_hull, residual, weiszfeld
from fwguide.geometry import objective

from conftest import CUBE, HEXAGON, random_field


def _scipy_oracle(beacons, weights):
    x0 = beacons.mean(axis=0) + 1e-3
    res = minimize(objective, x0, args=(beacons, weights), method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000, "maxfev": 40000})
    return res.x


def test_hexagon_and_cube_optimum_at_origin():
    for beacons in (HEXAGON, CUBE):
        sol = weiszfeld(np.array(beacons), np.ones(len(beacons)))
        assert sol.converged
        np.testing.assert_allclose(sol.point, 0.0, atol=1e-9)


def test_weiszfeld_matches_independent_minimiser():
    rng = np.random.default_rng(5)
    for n, d in [(3, 2), (5, 2), (4, 3), (7, 3)]:
        beacons, weights = random_field(rng, n, d)
        sol = weiszfeld(beacons, weights)
        np.testing.assert_allclose(sol.point, _scipy_oracle(beacons, weights), atol=1e-5)
        assert sol.residual <= 1e-8


def test_brute_force_matches_weiszfeld():
    rng = np.random.default_rng(6)
    beacons, weights = random_field(rng, 5, 2)
    np.testing.assert_allclose(brute_force(beacons, weights).point,
                               weiszfeld(beacons, weights).point, atol=1e-6)


def test_equilateral_triangle_gives_centroid():
    beacons = np.array([[np.cos(a), np.sin(a)] for a in 2 * np.pi * np.arange(3) / 3])
    sol = weiszfeld(beacons, np.ones(3))
    np.testing.assert_allclose(sol.point, 0.0, atol=1e-9)


def test_existence_fails_for_dominant_weight():
    beacons = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    rep = existence_check(beacons, np.array([5.0, 1.0, 1.0]))
    assert not rep.interior_minimum
    assert rep.margins[0] < 0
    # the minimiser is then the heavy beacon itself
    assert residual(beacons[0], beacons, np.array([5.0, 1.0, 1.0])) < 5.0


def test_existence_margins_for_hexagon():
    rep = existence_check(np.array(HEXAGON), np.ones(6))
    assert rep.interior_minimum
    assert np.all(rep.margins > 0)


def test_existence_rejects_duplicates_and_tiny_sets():
    with pytest.raises(ValueError):
        existence_check(np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]]), np.ones(3))
    with pytest.raises(ValueError):
        existence_check(np.array([[0.0, 0.0], [1.0, 1.0]]), np.ones(2))


def test_optimum_lies_in_convex_hull():
    rng = np.random.default_rng(8)
    for _ in range(5):
        beacons, weights = random_field(rng, 6, 3)
        assert in_convex_hull(weiszfeld(beacons, weights).point, beacons)
    assert not in_convex_hull(np.array([5.0, 5.0]), np.array(HEXAGON))


def test_weiszfeld_escapes_start_on_a_beacon():
    beacons = np.array(HEXAGON)
    sol = weiszfeld(beacons, np.ones(6), start=beacons[0])
    np.testing.assert_allclose(sol.point, 0.0, atol=1e-8)
