import numpy as np
import pytest

from vacuumlab.grids import GridSpec, from_function
from vacuumlab.pressure import PressureLaw


@pytest.fixture(scope="session")
def law():
    return PressureLaw(gamma=5.0 / 3.0)


@pytest.fixture(scope="session")
def small_grid():
    return GridSpec(1, (64, 64), (1.0, 1.0))


@pytest.fixture(scope="session")
def smooth_pair(small_grid):
    rho = from_function(small_grid,
                        lambda t, x: 1.0 + 0.3 * np.sin(2 * np.pi * x)
                        * np.cos(2 * np.pi * t))
    u = from_function(small_grid,
                      lambda t, x: 0.2 * np.cos(2 * np.pi * (x - t)))
    return rho, u
