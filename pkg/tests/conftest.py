import math

import pytest

from recoil_lab import EmissionPattern, Velocity

OMEGA0 = 2.0 * math.pi * 642e12
GAMMA = 3.2e7


@pytest.fixture
def iso():
    return EmissionPattern.isotropic(OMEGA0, GAMMA)


@pytest.fixture
def v_slow():
    return Velocity.from_beta(1e-3, (0.0, 0.0, 1.0))
