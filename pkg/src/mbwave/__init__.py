"""Numerical laboratory for wave equations on domains with moving timelike boundaries."""

__version__ = "0.1.0"
