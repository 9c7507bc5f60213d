import numpy as np
import pytest

from fwguide.geometry import (
    bearing,
    bearings,
    grad_f,
    hessian_f,
    hessian_min_eig,
    objective,
    proj,
    projector_sum,
    weighted_bearing_sum,
)

from conftest import HEXAGON


def test_bearing_is_unit_and_points_at_target():
    g = bearing([0.0, 0.0], [3.0, 4.0])
    np.testing.assert_allclose(g, [0.6, 0.8])


def test_bearing_at_coincidence_is_zero():
    assert np.all(bearing([1.0, 2.0], [1.0, 2.0]) == 0.0)
    g, dist = bearings(np.array([1.0, 1.0]), np.array(HEXAGON))
    assert np.all(g[0] == 0.0) and dist[0] == 0.0
    np.testing.assert_allclose(np.linalg.norm(g[1:], axis=1), 1.0)


def test_projector_properties():
    g = np.array([0.6, 0.0, 0.8])
    P = proj(g)
    np.testing.assert_allclose(P @ P, P, atol=1e-15)
    np.testing.assert_allclose(P, P.T)
    np.testing.assert_allclose(P @ g, 0.0, atol=1e-15)
    np.testing.assert_allclose(np.linalg.eigvalsh(P), [0.0, 1.0, 1.0], atol=1e-15)


def test_projector_rejects_zero_bearing():
    with pytest.raises(ValueError):
        proj(np.zeros(2))


def test_hexagon_objective_and_gradient_at_origin():
    beacons, w = np.array(HEXAGON), np.ones(6)
    assert objective([0.0, 0.0], beacons, w) == pytest.approx(4 + 4 * np.sqrt(2))
    np.testing.assert_allclose(grad_f([0.0, 0.0], beacons, w), 0.0, atol=1e-15)
    g, _ = bearings(np.zeros(2), beacons)
    np.testing.assert_allclose(weighted_bearing_sum(g, w), 0.0, atol=1e-15)


def test_hexagon_projector_sum_and_hessian():
    beacons, w = np.array(HEXAGON), np.ones(6)
    g, _ = bearings(np.zeros(2), beacons)
    np.testing.assert_allclose(projector_sum(g, w), np.diag([4.0, 2.0]), atol=1e-14)
    H = hessian_f(np.zeros(2), beacons, w)
    np.testing.assert_allclose(H, np.diag([1 + np.sqrt(2), np.sqrt(2)]), atol=1e-14)


def test_grad_is_negative_weighted_bearing_sum():
    rng = np.random.default_rng(3)
    beacons, w = rng.normal(size=(5, 3)), rng.uniform(0.5, 2, 5)
    p = rng.normal(size=3)
    g, _ = bearings(p, beacons)
    np.testing.assert_allclose(grad_f(p, beacons, w), -weighted_bearing_sum(g, w))


def test_gradient_matches_central_differences():
    rng = np.random.default_rng(11)
    beacons, w = rng.uniform(-2, 2, size=(6, 2)), rng.uniform(0.5, 2, 6)
    h = 1e-6
    for p in rng.uniform(-2, 2, size=(20, 2)):
        fd = [(objective(p + h * e, beacons, w) - objective(p - h * e, beacons, w)) / (2 * h)
              for e in np.eye(2)]
        np.testing.assert_allclose(grad_f(p, beacons, w), fd, atol=1e-6)


def test_hessian_rejects_beacon_position():
    with pytest.raises(ValueError):
        hessian_f(np.array([1.0, 1.0]), np.array(HEXAGON), np.ones(6))


def test_hessian_min_eig_vectorised_matches_pointwise():
    beacons, w = np.array(HEXAGON), np.ones(6)
    pts = np.array([[0.0, 0.0], [0.3, -0.2], [-0.5, 0.4]])
    expected = [np.linalg.eigvalsh(hessian_f(p, beacons, w))[0] for p in pts]
    np.testing.assert_allclose(hessian_min_eig(pts, beacons, w), expected)
