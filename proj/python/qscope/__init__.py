"""Python interface to the qscope simulator core."""

from ._qscope import *  # noqa: F401,F403
from ._qscope import __version__  # noqa: F401
