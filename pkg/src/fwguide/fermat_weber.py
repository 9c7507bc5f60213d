"""Control-free Fermat-Weber solvers used as ground truth.

:func:`weiszfeld` is the production solver; :func:`brute_force` is a slow
grid-refinement search that only evaluates the objective, kept independent so
the two can cross-check each other.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from fwguide.geometry import COINCIDENCE_TOL, bearings, weighted_bearing_sum

# An iterate this close to a beacon is nudged off it.
BEACON_SNAP_TOL = 1e-9
BEACON_ESCAPE_STEP = 1e-6


@dataclass(frozen=True)
class FwSolution:
    point: np.ndarray
    residual: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class ExistenceReport:
    margins: np.ndarray
    interior_minimum: bool


def residual(p, beacons, weights) -> float:
    """Norm of ``sum_i w_i g_i`` at ``p``; zero exactly at the optimum.

    At a beacon the coincident term vanishes, so this returns the left side
    of the existence inequality for that beacon.
    """
    g, _ = bearings(p, beacons)
    return float(np.linalg.norm(weighted_bearing_sum(g, weights)))


def _check_distinct(beacons):
    n = len(beacons)
    for i, j in itertools.combinations(range(n), 2):
        if np.linalg.norm(beacons[i] - beacons[j]) < COINCIDENCE_TOL:
            raise ValueError(f"beacons {i} and {j} coincide")


def existence_check(beacons, weights) -> ExistenceReport:
    """Evaluate ``||sum_{i != k} w_i g_i|| - w_k`` at every beacon ``k``.

    All margins positive means the minimiser is unique and is not a beacon.
    """
    beacons = np.asarray(beacons, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if len(beacons) < 3:
        raise ValueError("at least three beacons are required")
    _check_distinct(beacons)
    margins = np.array(
        [residual(pk, beacons, weights) - weights[k] for k, pk in enumerate(beacons)]
    )
    return ExistenceReport(margins=margins, interior_minimum=bool(np.all(margins > 0)))


def weiszfeld(beacons, weights, tol=1e-10, max_iter=10_000, start=None) -> FwSolution:
    """Weighted Weiszfeld fixed-point iteration.

    Parameters
    ----------
    beacons : array_like, shape (n, d)
    weights : array_like, shape (n,)
    tol : float
        Stop once ``||sum_i w_i g_i|| <= tol``.
    max_iter : int
    start : array_like, optional
        Initial iterate; defaults to the weighted centroid.

    Returns
    -------
    FwSolution
        ``converged`` is False if ``max_iter`` was exhausted; the last iterate
        is returned in that case.
    """
    beacons = np.asarray(beacons, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if start is None:
        p = weights @ beacons / weights.sum()
    else:
        p = np.array(start, dtype=float)

    it = 0
    while True:
        g, dist = bearings(p, beacons)
        hit = np.flatnonzero(dist < BEACON_SNAP_TOL)
        if hit.size:
            k = hit[0]
            others = np.ones(len(beacons), dtype=bool)
            others[k] = False
            pull = weights[others] @ g[others]
            norm = np.linalg.norm(pull)
            if norm == 0.0:
                pull, norm = np.eye(p.size)[0], 1.0
            p = beacons[k] + BEACON_ESCAPE_STEP * pull / norm
            continue
        res = float(np.linalg.norm(weights @ g))
        if res <= tol:
            return FwSolution(point=p, residual=res, iterations=it, converged=True)
        if it >= max_iter:
            return FwSolution(point=p, residual=res, iterations=it, converged=False)
        coef = weights / dist
        p = coef @ beacons / coef.sum()
        it += 1


def brute_force(beacons, weights, box=None, coarse_step=0.05, refinements=None,
                half_width=4) -> FwSolution:
    """Grid-search minimiser of the objective with successive refinement.

    A full grid with spacing ``coarse_step`` covers ``box`` (default: the
    beacons' bounding box). Each refinement halves the spacing and searches a
    ``(2*half_width+1)^d`` window around the incumbent. Without an explicit
    ``refinements`` count, refinement continues until the spacing is at most
    ``1e-7``.
    """
    beacons = np.asarray(beacons, dtype=float)
    weights = np.asarray(weights, dtype=float)
    d = beacons.shape[1]
    if box is None:
        box = (beacons.min(axis=0), beacons.max(axis=0))
    lo, hi = (np.asarray(b, dtype=float) for b in box)

    def evaluate(points):
        diff = points[:, None, :] - beacons[None, :, :]
        return np.linalg.norm(diff, axis=2) @ weights

    axes = [np.arange(lo[k], hi[k] + coarse_step / 2, coarse_step) for k in range(d)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    values = evaluate(grid)
    best = grid[np.argmin(values)]

    if refinements is None:
        refinements = int(np.ceil(np.log2(coarse_step / 1e-7)))
    offsets = np.arange(-half_width, half_width + 1, dtype=float)
    stencil = np.stack(np.meshgrid(*([offsets] * d), indexing="ij"), axis=-1).reshape(-1, d)
    step = coarse_step
    for _ in range(refinements):
        step /= 2.0
        cand = best + step * stencil
        best = cand[np.argmin(evaluate(cand))]

    return FwSolution(point=best, residual=residual(best, beacons, weights),
                      iterations=refinements, converged=True)


def in_convex_hull(point, beacons, tol=1e-9) -> bool:
    """Whether ``point`` is a convex combination of the beacons (LP feasibility)."""
    from scipy.optimize import linprog

    beacons = np.asarray(beacons, dtype=float)
    n = len(beacons)
    A_eq = np.vstack([beacons.T, np.ones(n)])
    b_eq = np.append(np.asarray(point, dtype=float), 1.0)
    res = linprog(np.zeros(n), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * n, method="highs")
    if res.status != 0:
        return False
    return bool(np.linalg.norm(A_eq @ res.x - b_eq) <= tol)
