"""Deterministic multi-floor indoor exploration simulator and benchmark."""

__version__ = "0.1.0"

from .config import ExploreConfig
from .grids import FREE, OCCUPIED, UNKNOWN

__all__ = ["ExploreConfig", "UNKNOWN", "FREE", "OCCUPIED", "__version__"]
