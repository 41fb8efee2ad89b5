import numpy as np
import pytest

from randla.rng import RngStream


@pytest.fixture
def gen():
    return RngStream(2024).generator()


def streams(seed, count):
    return [RngStream(seed, i).generator() for i in range(count)]


def rel(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), np.finfo(float).tiny)
