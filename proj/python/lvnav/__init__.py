"""Launch-ascent GNSS navigation simulator and Kalman filter benchmark."""

from lvnav._core import *  # noqa: F401,F403
from lvnav._core import __doc__ as _core_doc

__doc__ = _core_doc
