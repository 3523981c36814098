"""Curvature of warped metrics on the complex hyperbolic plane minus a totally real plane."""

__version__ = "0.1.0"
