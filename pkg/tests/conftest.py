import numpy as np
import pytest

from modules import configuration
from modules.states.stabilizer import builtin_code


@pytest.fixture(autouse=True)
def default_configuration():
    configuration.load()
    yield
    configuration.load()


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def steane():
    return builtin_code("steane")
