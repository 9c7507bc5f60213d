"""
Double-integrator agent
=======================

Acceleration commands on a cube of eight beacons.
"""

import numpy as np

from fwguide.scenarios import load_preset

for name in ("sim2a", "sim2b", "sim2c"):
    sc = load_preset(name)
    tr = sc.simulate()
    vstar = sc.beacons.velocity_at(tr.t[-1])
    print(f"{name}: law {sc.law.kind:12s} |delta(T)| = {tr.delta_norm[-1]:.2e}  "
          f"|v - v*| = {np.linalg.norm(tr.v[-1] - vstar):.2e}  V(0) -> V(T): {tr.V[0]:.2f} -> {tr.V[-1]:.2e}")
