import functools

import numpy as np
import pytest

from sailorbits.dynamics import SystemParams
from sailorbits.equilibria import find_aep
from sailorbits.lindstedt import build

MU = 3.0026053634189284e-6
BETA = 0.002
CASES = [(80.0, 0.0), (0.0, 40.0), (80.0, 40.0)]
CASE_IDS = ["a80-g0", "a0-g40", "a80-g40"]


def params_for(alpha_deg, gamma_deg, beta=BETA, mu=MU):
    return SystemParams.from_degrees(mu, beta, alpha_deg, gamma_deg)


@functools.lru_cache(maxsize=None)
def aep_for(alpha_deg, gamma_deg, beta=BETA):
    return find_aep(params_for(alpha_deg, gamma_deg, beta))


@functools.lru_cache(maxsize=None)
def series_for(alpha_deg, gamma_deg, order, beta=BETA):
    """Series builds are the slow part of the suite; share them across modules."""
    return build(aep_for(alpha_deg, gamma_deg, beta), order)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
