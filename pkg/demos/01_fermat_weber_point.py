"""
Locating the Fermat-Weber point
===============================

The point minimising the weighted sum of distances to a set of beacons.
"""

import numpy as np

from fwguide.fermat_weber import brute_force, existence_check, in_convex_hull, weiszfeld
from fwguide.geometry import hessian_f, objective

# six unit-weight beacons on a hexagon
hexagon = np.array([[1, 1], [0, 2], [-1, 1], [-1, -1], [0, -2], [1, -1]], dtype=float)
w = np.ones(6)

sol = weiszfeld(hexagon, w)
print("optimum", sol.point, "after", sol.iterations, "iterations")
print("f(p*) =", objective(sol.point, hexagon, w), "(4 + 4 sqrt 2 =", 4 + 4 * np.sqrt(2), ")")

# The optimum is unique and away from every beacon when each margin is positive.
print("existence margins", existence_check(hexagon, w).margins.round(3))

# %%
# An independent check: a refined grid search lands on the same point.
rng = np.random.default_rng(1)
beacons = rng.uniform(-3, 3, size=(5, 3))
weights = rng.uniform(0.5, 2, size=5)
fast, slow = weiszfeld(beacons, weights), brute_force(beacons, weights)
print("weiszfeld vs grid:", np.linalg.norm(fast.point - slow.point))
print("inside the hull:", in_convex_hull(fast.point, beacons))

# %%
# Making one weight dominant pulls the optimum onto that beacon, and the
# margin for that beacon turns negative.
heavy = np.array([5.0, 1, 1, 1, 1, 1])
print("heavy margins", existence_check(hexagon, heavy).margins.round(3))

# Curvature at the optimum bounds how fast gradient descent closes in.
print("Hessian eigenvalues at p*", np.linalg.eigvalsh(hessian_f(sol.point, hexagon, w)))
