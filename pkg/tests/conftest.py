import numpy as np
import pytest

from diracres import fixtures


@pytest.fixture
def free():
    return fixtures.free()


@pytest.fixture
def q1():
    return fixtures.q_const()


@pytest.fixture
def cubic():
    return fixtures.smooth_cubic()


@pytest.fixture
def bump():
    return fixtures.smooth_bump()


@pytest.fixture
def well():
    return fixtures.deep_well()


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
