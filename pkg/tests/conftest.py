import numpy as np
import pytest

from bvlorentz.grid import GridFunction


@pytest.fixture
def checker2d():
    """4x4 checkerboard on the unit square, level 2."""
    arr = np.indices((4, 4)).sum(axis=0) % 2
    return GridFunction(2, 2, (0, 0), (4, 4), arr.astype(float))


@pytest.fixture
def single_cell():
    arr = np.zeros((4, 4))
    arr[1, 2] = 3.0
    return GridFunction(2, 2, (0, 0), (4, 4), arr)
