"""Bearing-only guidance toward the Fermat-Weber point of a beacon set.

The package is organised in layers:

* :mod:`fwguide.geometry` - bearings, projections, the weighted-distance
  objective and its derivatives.
* :mod:`fwguide.fermat_weber` - control-free solvers for the Fermat-Weber
  point (Weiszfeld iteration and a brute-force grid oracle).
* :mod:`fwguide.laws` - the bearing-only control laws.
* :mod:`fwguide.world` - beacon motion, agent dynamics and the fixed-step
  simulation loop.
* :mod:`fwguide.analysis` - Lyapunov certificates evaluated on trajectories.
* :mod:`fwguide.scenarios` - scenario files, presets, CSV output and batch runs.
"""

from fwguide.fermat_weber import brute_force, existence_check, residual, weiszfeld
from fwguide.geometry import bearing, grad_f, hessian_f, objective, proj
from fwguide.laws import ControlLaw, NoiseModel
from fwguide.scenarios import Scenario, load_preset, load_scenario, run_scenario
from fwguide.world import BeaconField, MotionProfile, simulate

__all__ = [
    "BeaconField",
    "ControlLaw",
    "MotionProfile",
    "NoiseModel",
    "Scenario",
    "bearing",
    "brute_force",
    "existence_check",
    "grad_f",
    "hessian_f",
    "load_preset",
    "load_scenario",
    "objective",
    "proj",
    "residual",
    "run_scenario",
    "simulate",
    "weiszfeld",
]

__version__ = "0.1.0"
