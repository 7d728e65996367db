import numpy as np
import pytest

from chen_holonomy.presets import preset


@pytest.fixture(scope="session")
def presets():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = preset(name)
        return cache[name]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
