import numpy as np
import pytest

from wgbh.mesh import generate_unit_square


@pytest.fixture(scope="session")
def coarse_mesh():
    return generate_unit_square(5, 0.2, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
