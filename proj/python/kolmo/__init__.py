"""Stochastic cubic Kolmogorov system lab."""

from ._kolmo import *  # noqa: F401,F403
from ._kolmo import __version__  # noqa: F401
