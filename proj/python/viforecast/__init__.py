"""Python bindings for the viforecast C++ core."""

from ._viforecast import *  # noqa: F401,F403
from ._viforecast import __doc__  # noqa: F401

__version__ = "0.1.0"
