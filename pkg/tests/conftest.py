import numpy as np
import pytest

import relshock as rs


@pytest.fixture(scope="session")
def burgers_pair():
    return rs.make_pair("burgers", "quadratic")


@pytest.fixture(scope="session")
def quartic_pair():
    return rs.make_pair("quartic", "remark12")


@pytest.fixture(scope="session")
def burgers_profile(burgers_pair):
    return rs.solve_profile(burgers_pair, 1.0, 0.5, lam=0.25)


@pytest.fixture(scope="session")
def quartic_profile(quartic_pair):
    return rs.solve_profile(quartic_pair, 1.0, 0.1, lam=0.25)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
