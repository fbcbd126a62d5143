"""Pseudo-spectral simulation of 2D NLS with a mollified white-noise potential."""
__version__ = "0.1.0"
