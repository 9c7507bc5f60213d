import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fwguide.fermat_weber import existence_check, weiszfeld
from fwguide.geometry import bearings, hessian_f, objective, proj
from fwguide.laws import rotate_bearing, sgn_phi, sig

coords = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


@st.composite
def fields(draw, dims=(2, 3)):
    d = draw(st.sampled_from(dims))
    n = draw(st.integers(3, 8))
    beacons = draw(arrays(float, (n, d), elements=coords))
    weights = draw(arrays(float, n, elements=st.floats(0.5, 2.0)))
    centred = beacons - beacons.mean(axis=0)
    assume(np.linalg.matrix_rank(centred, tol=1e-2) >= 2)
    dists = np.linalg.norm(beacons[:, None] - beacons[None], axis=-1)
    assume(dists[np.triu_indices(n, 1)].min() > 1e-2)
    return beacons, weights


@st.composite
def interior_fields(draw):
    beacons, weights = draw(fields())
    assume(existence_check(beacons, weights).interior_minimum)
    return beacons, weights


@given(fields(), arrays(float, 3, elements=coords))
def test_bearings_are_unit_or_zero(field, p):
    beacons, _ = field
    p = p[: beacons.shape[1]]
    g, dist = bearings(p, beacons)
    norms = np.linalg.norm(g, axis=1)
    assert np.all((np.abs(norms - 1) < 1e-12) | ((norms == 0) & (dist < 1e-12)))
    np.testing.assert_allclose(np.linalg.norm(beacons - p, axis=1), dist)


@given(arrays(float, 3, elements=coords))
def test_projector_is_orthogonal_projection(v):
    assume(np.linalg.norm(v) > 1e-3)
    g = v / np.linalg.norm(v)
    P = proj(g)
    np.testing.assert_allclose(P @ P, P, atol=1e-12)
    np.testing.assert_allclose(P @ g, 0, atol=1e-12)
    assert abs(np.trace(P) - 2.0) < 1e-12


@given(fields(), arrays(float, 3, elements=coords))
def test_hessian_is_positive_semidefinite(field, p):
    beacons, weights = field
    p = p[: beacons.shape[1]]
    assume(np.linalg.norm(beacons - p, axis=1).min() > 1e-2)
    assert np.linalg.eigvalsh(hessian_f(p, beacons, weights))[0] > -1e-10


@settings(max_examples=40)
@given(interior_fields(), arrays(float, 3, elements=st.floats(-1, 1)))
def test_weiszfeld_point_is_minimal_and_bounds_hold(field, step):
    beacons, weights = field
    d = beacons.shape[1]
    sol = weiszfeld(beacons, weights)
    assume(sol.converged)
    fstar = objective(sol.point, beacons, weights)
    q = sol.point + step[:d]
    assert objective(q, beacons, weights) >= fstar - 1e-9
    # z^T W (g - g*) >= 0 and z*^T W (g - g*) <= 0
    gs, ds = bearings(sol.point, beacons)
    g, dist = bearings(q, beacons)
    cos = np.einsum("ij,ij->i", g, gs)
    energy = weights @ (dist * (1 - cos))
    assert energy >= -1e-9
    assert abs(energy - (objective(q, beacons, weights) - fstar)) < 1e-7
    assert weights @ (ds * (cos - 1)) <= 1e-9
    delta = np.linalg.norm(step[:d])
    assert np.all(dist <= delta + ds + 1e-9)
    assert np.all(dist >= np.abs(delta - ds) - 1e-9)


@settings(max_examples=30)
@given(interior_fields(), arrays(float, 3, elements=coords), st.floats(0.2, 5.0))
def test_weiszfeld_equivariance(field, shift, scale):
    beacons, weights = field
    d = beacons.shape[1]
    base = weiszfeld(beacons, weights, tol=1e-12)
    assume(base.converged)
    moved = weiszfeld(scale * beacons + shift[:d], 3.0 * weights, tol=1e-12)
    np.testing.assert_allclose(moved.point, scale * base.point + shift[:d], atol=1e-6 * (1 + scale))


@given(arrays(float, 5, elements=coords), st.floats(0.05, 0.95))
def test_sig_is_odd_power(x, a):
    np.testing.assert_allclose(sig(-x, a), -sig(x, a))
    assert np.all(np.sign(sig(x, a)) == np.sign(x))
    np.testing.assert_allclose(np.abs(sig(x, a)), np.abs(x) ** a)


@given(arrays(float, 5, elements=coords), st.floats(0.0, 1.0))
def test_sgn_phi_bounded_and_odd(x, phi):
    s = sgn_phi(x, phi)
    assert np.all(np.abs(s) <= 1.0)
    np.testing.assert_allclose(sgn_phi(-x, phi), -s)
    outside = np.abs(x) >= phi
    np.testing.assert_allclose(s[outside & (x != 0)], np.sign(x[outside & (x != 0)]))


@given(arrays(float, 3, elements=coords), st.floats(-7, 7))
def test_rotation_preserves_norm(v, theta):
    np.testing.assert_allclose(np.linalg.norm(rotate_bearing(v, theta)), np.linalg.norm(v), atol=1e-10)
    np.testing.assert_allclose(np.linalg.norm(rotate_bearing(v[:2], theta)), np.linalg.norm(v[:2]), atol=1e-10)
