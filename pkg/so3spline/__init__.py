"""so3spline - Surface splines on the rotation group SO(3)."""

from __future__ import annotations

__version__ = "0.1.0"
