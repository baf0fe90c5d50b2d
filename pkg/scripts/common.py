"""Shared setup for the scripts in this directory."""

from sailorbits.dynamics import SystemParams
from sailorbits.equilibria import find_aep

MU = 3.0026053634189284e-6
BETA = 0.002
CASES = {"a80_g0": (80.0, 0.0), "a0_g40": (0.0, 40.0), "a80_g40": (80.0, 40.0)}


def aep(alpha_deg, gamma_deg, beta=BETA):
    return find_aep(SystemParams.from_degrees(MU, beta, alpha_deg, gamma_deg))
