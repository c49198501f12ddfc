"""Constant-product AMM mean-field game simulator and solver."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
