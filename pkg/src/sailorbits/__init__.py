"""Solar-sail orbits about artificial equilibria of the Sun-Earth system."""

from .dynamics import State, SystemParams
from .equilibria import Aep, find_aep, sweep_aep
from .lindstedt import SeriesSolution, build
from .linearization import linear_model

__all__ = ["Aep", "SeriesSolution", "State", "SystemParams", "build", "find_aep", "linear_model", "sweep_aep"]
