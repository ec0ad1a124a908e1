from sflab._core import *  # noqa: F401,F403
from sflab._core import __version__  # noqa: F401
