import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from sparselab.sample import GridFunction

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def grid_values(L, lo=-10.0, hi=10.0, n=1):
    size = 2 ** (n * L)
    return st.lists(st.floats(lo, hi, allow_nan=False, allow_infinity=False), min_size=size, max_size=size)


@st.composite
def grid_functions(draw, n=1, min_level=1, max_level=5, lo=-10.0, hi=10.0):
    L = draw(st.integers(min_level, max_level))
    return GridFunction(n, L, np.array(draw(grid_values(L, lo, hi, n))))


@st.composite
def positive_grids(draw, n=1, min_level=1, max_level=5):
    L = draw(st.integers(min_level, max_level))
    size = 2 ** (n * L)
    vals = draw(st.lists(st.floats(0.05, 20.0), min_size=size, max_size=size))
    return GridFunction(n, L, np.array(vals))
