import math

import numpy as np
import pytest
from hypothesis import settings

from fwguide.world import BeaconField

# compiled kernels make the first example slow
settings.register_profile("fwguide", deadline=None)
settings.load_profile("fwguide")

HEXAGON = ((1.0, 1.0), (0.0, 2.0), (-1.0, 1.0), (-1.0, -1.0), (0.0, -2.0), (1.0, -1.0))
CUBE = tuple((float(x), float(y), float(z)) for x in (1, -1) for y in (1, -1) for z in (1, -1))


@pytest.fixture
def hexagon():
    return BeaconField(HEXAGON, (1.0,) * 6)


@pytest.fixture
def cube():
    return BeaconField(CUBE, (1.0,) * 8)


def random_field(rng, n, d):
    """Beacons in [-3, 3]^d with weights in [0.5, 2], redrawn until the optimum is interior."""
    from fwguide.fermat_weber import existence_check

    while True:
        beacons = rng.uniform(-3, 3, size=(n, d))
        weights = rng.uniform(0.5, 2.0, size=n)
        centred = beacons - beacons.mean(axis=0)
        if np.linalg.matrix_rank(centred, tol=1e-3) < min(d, n - 1):
            continue
        if existence_check(beacons, weights).interior_minimum:
            return beacons, weights


HEX_FSTAR = 4.0 + 4.0 * math.sqrt(2.0)
CUBE_FSTAR = 8.0 * math.sqrt(3.0)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
