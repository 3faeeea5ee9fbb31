from collections import deque

import numpy as np
import pytest

from maxdropout_lab.logger import logger


class ScriptedRng:
    """Stand-in for Rng that replays fixed draws so stochastic ops land where a test needs them."""

    def __init__(self, integers=(), randoms=(), uniforms=(), default_integer=None, fill=0.5):
        self._integers = deque(integers)
        self._randoms = deque(randoms)
        self._uniforms = deque(uniforms)
        self.default_integer = default_integer
        self.fill = fill

    def integers(self, low, high):
        if self._integers:
            value = self._integers.popleft()
        elif self.default_integer is not None:
            value = self.default_integer
        else:
            raise AssertionError("ScriptedRng ran out of integer draws")
        assert low <= value < high, f"scripted integer {value} outside [{low}, {high})"
        return value

    def random(self):
        return self._randoms.popleft() if self._randoms else 0.0

    def uniform(self, low, high):
        return self._uniforms.popleft() if self._uniforms else low

    def random_array(self, shape):
        return np.full(tuple(shape), self.fill, dtype=np.float32)


@pytest.fixture
def scripted_rng():
    return ScriptedRng


@pytest.fixture
def np_rng():
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def quiet_logger():
    logger.setLevel("WARNING")
    yield
    logger.setLevel("INFO")
