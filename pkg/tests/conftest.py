import numpy as np
import pytest

from macap import ChannelMatrix, IpdProduct, MacType, index_tuple


def make_adder() -> ChannelMatrix:
    """Binary adder: output is the integer sum of two binary inputs."""
    t = MacType((2, 2), 3)
    probs = np.zeros((3, 4))
    for c in range(4):
        i1, i2 = index_tuple(c, t)
        probs[i1 + i2, c] = 1.0
    return ChannelMatrix(t, probs)


def make_bsc(eps: float) -> ChannelMatrix:
    t = MacType((2,), 2)
    return ChannelMatrix(t, np.array([[1.0 - eps, eps], [eps, 1.0 - eps]]))


def make_identity2() -> ChannelMatrix:
    return make_bsc(0.0)


@pytest.fixture(scope="session")
def adder() -> ChannelMatrix:
    return make_adder()


@pytest.fixture(scope="session")
def identity2() -> ChannelMatrix:
    return make_identity2()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
