"""Numerical and exact checks for Bergman kernels of 2-D unit-ball quotients by reflection groups."""

__version__ = "0.1.0"
