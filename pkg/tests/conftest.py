import numpy as np
import pytest

from polytomo import (
    assign_exposures,
    cube,
    ghz,
    octahedron,
    tensor_protocol,
    tetrahedron,
)


@pytest.fixture(scope="session")
def tetra():
    return tetrahedron()


@pytest.fixture(scope="session")
def octa():
    return octahedron()


@pytest.fixture(scope="session")
def cube1():
    return cube()


@pytest.fixture(scope="session")
def tetra3():
    return tensor_protocol([tetrahedron()] * 3)


@pytest.fixture(scope="session")
def octa3():
    return tensor_protocol([octahedron()] * 3)


@pytest.fixture(scope="session")
def tetra3_n1e5(tetra3):
    return assign_exposures(tetra3, 1e5)


@pytest.fixture(scope="session")
def octa3_n1e5(octa3):
    return assign_exposures(octa3, 1e5)


@pytest.fixture(scope="session")
def ghz3():
    return ghz(3)


def random_amplitude(dim, rank, seed):
    """Haar-flavored random amplitude matrix of the given shape."""
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    from polytomo import AmplitudeMatrix

    return AmplitudeMatrix(raw / np.linalg.norm(raw))
