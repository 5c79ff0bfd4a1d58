"""Polar-adjusted convolutional (PAC) codes: construction, decoders, analysis."""
__version__ = "0.1.0"
