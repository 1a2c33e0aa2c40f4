"""Rate-equation and readout model for NV-ensemble magnetometry by IR absorption
in a metal-grating pixel, with homodyne or direct camera detection."""

__version__ = "0.1.0"
