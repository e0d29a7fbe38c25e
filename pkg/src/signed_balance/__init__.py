"""Homophily- and influence-based appraisal dynamics on signed networks."""
from .balance import *  # noqa: F401,F403
from .core import *  # noqa: F401,F403
from .dynamics import *  # noqa: F401,F403
from .experiments import *  # noqa: F401,F403

__version__ = "0.1.0"
