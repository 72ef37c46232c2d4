"""Spectral estimation under static classical (dressing) noise."""

__version__ = "0.1.0"
