"""jolt - jerk-limited online trajectories.

Converts geometric joint-space paths and online replanning targets
into kinematically bounded quintic/quartic spline trajectories, and
certifies them collision-free against static or moving obstacles via
distance-based free-space bubbles.
"""

from .backend import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
