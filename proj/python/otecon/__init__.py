"""Optimal transport solvers, bounds and matching estimators."""

from ._otecon import *  # noqa: F401,F403
from ._otecon import __version__  # noqa: F401
