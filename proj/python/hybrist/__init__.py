from ._hybrist import *  # noqa: F401,F403
from ._hybrist import __doc__  # noqa: F401
