"""Simulation and analysis tools for a conservative quadratic system in 3D."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
