import numpy as np
import pytest

from isobem.geometry import make_cube, make_plate, make_quarter_pipe
from isobem.mesh import initial_mesh_for


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture(scope="session")
def cube():
    return make_cube()


@pytest.fixture(scope="session")
def quarter_pipe():
    return make_quarter_pipe()


@pytest.fixture(scope="session")
def plate():
    return make_plate()


@pytest.fixture(scope="session")
def cube_mesh0(cube):
    """p=0 cube, one element per face"""
    return initial_mesh_for(cube, 0)


@pytest.fixture(scope="session")
def cube_mesh1(cube):
    """p=1 cube, one element per face"""
    return initial_mesh_for(cube, 1)
