"""
Exact-arithmetic engine for open boundary reductions of quad equations.
"""

from .models import StripConfig, StripState
from .strip import iterate, step_up

__all__ = ["StripConfig", "StripState", "iterate", "step_up"]
