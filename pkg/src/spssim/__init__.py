"""Sidelink mode-4 SB-SPS broadcast simulator (sensing, reservation, PHY, metrics)."""

__version__ = "0.1.0"

from spssim.grid import GridConfig, Csr
from spssim.config import RunConfig, ConfigError

__all__ = ["GridConfig", "Csr", "RunConfig", "ConfigError", "__version__"]
