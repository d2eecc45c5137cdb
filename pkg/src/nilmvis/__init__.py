"""Appliance recognition from one-cycle current feature images."""

from .gaf import encode
from .signal import CurrentCycle, WaveletConfig, extract_cycle, extract_features

__version__ = "0.1.0"

__all__ = ["CurrentCycle", "WaveletConfig", "encode", "extract_cycle", "extract_features", "__version__"]
