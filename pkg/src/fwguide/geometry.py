"""Vector geometry shared by every other module.

Points are 1-D float arrays of length ``d`` (2 or 3). Beacon sets are
``(n, d)`` arrays with a matching ``(n,)`` weight vector.
"""

from __future__ import annotations

import numpy as np

# Below this separation two points are treated as coincident.
COINCIDENCE_TOL = 1e-12


def bearing(origin, target) -> np.ndarray:
    """Unit vector pointing from ``origin`` to ``target``.

    Returns the zero vector when the two points coincide.
    """
    diff = np.asarray(target, dtype=float) - np.asarray(origin, dtype=float)
    dist = np.linalg.norm(diff)
    if dist < COINCIDENCE_TOL:
        return np.zeros_like(diff)
    return diff / dist


def bearings(p, beacons) -> tuple[np.ndarray, np.ndarray]:
    """Bearings and distances from ``p`` to every beacon.

    Returns ``(g, dist)`` with ``g`` of shape ``(n, d)``. Rows for coincident
    beacons are exactly zero.
    """
    z = np.asarray(beacons, dtype=float) - np.asarray(p, dtype=float)
    dist = np.sqrt(np.einsum("ij,ij->i", z, z))
    safe = np.where(dist < COINCIDENCE_TOL, np.inf, dist)
    return z / safe[:, None], dist


def proj(g) -> np.ndarray:
    """Orthogonal projector ``I - g g^T`` onto the complement of ``g``."""
    g = np.asarray(g, dtype=float)
    norm = np.linalg.norm(g)
    if norm < COINCIDENCE_TOL:
        raise ValueError("projection matrix is undefined for a zero bearing")
    g = g / norm
    return np.eye(g.size) - np.outer(g, g)


def objective(p, beacons, weights) -> float:
    """Weighted sum of Euclidean distances from ``p`` to the beacons."""
    _, dist = bearings(p, beacons)
    return float(np.dot(weights, dist))


def weighted_bearing_sum(g, weights) -> np.ndarray:
    """``sum_i w_i g_i`` for a stack of bearings ``g``."""
    return np.asarray(weights, dtype=float) @ np.asarray(g, dtype=float)


def grad_f(p, beacons, weights) -> np.ndarray:
    """Gradient of :func:`objective`, equal to ``-sum_i w_i g_i``.

    Coincident beacons contribute nothing (zero-bearing convention).
    """
    g, _ = bearings(p, beacons)
    return -weighted_bearing_sum(g, weights)


def hessian_f(p, beacons, weights) -> np.ndarray:
    """Hessian ``sum_i w_i P_{g_i} / d_i`` of the objective at ``p``."""
    g, dist = bearings(p, beacons)
    if np.any(dist < COINCIDENCE_TOL):
        raise ValueError("Hessian is undefined at a beacon position")
    d = g.shape[1]
    scale = np.asarray(weights, dtype=float) / dist
    return scale.sum() * np.eye(d) - np.einsum("i,ij,ik->jk", scale, g, g)


def hessian_min_eig(points, beacons, weights) -> np.ndarray:
    """Smallest Hessian eigenvalue at each row of ``points`` (vectorised)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    beacons = np.asarray(beacons, dtype=float)
    z = beacons[None, :, :] - points[:, None, :]
    dist = np.linalg.norm(z, axis=2)
    if np.any(dist < COINCIDENCE_TOL):
        raise ValueError("Hessian is undefined at a beacon position")
    g = z / dist[:, :, None]
    scale = np.asarray(weights, dtype=float)[None, :] / dist
    d = points.shape[1]
    H = scale.sum(axis=1)[:, None, None] * np.eye(d) - np.einsum("mi,mij,mik->mjk", scale, g, g)
    return np.linalg.eigvalsh(H)[:, 0]


def projector_sum(g, weights) -> np.ndarray:
    """``sum_i w_i P_{g_i}`` for unit bearings ``g``."""
    g = np.asarray(g, dtype=float)
    w = np.asarray(weights, dtype=float)
    return w.sum() * np.eye(g.shape[1]) - np.einsum("i,ij,ik->jk", w, g, g)
