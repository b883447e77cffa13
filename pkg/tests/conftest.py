import numpy as np
import pytest

from radarcube.radar_model import RadarConfig


@pytest.fixture(scope="session")
def cfg():
    return RadarConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
