"""Pseudospectral laboratory for the defocusing wave equation
``u_tt - Lap u + |u|^{p-1} u = 0`` on T^3 with randomized initial data."""

__version__ = "0.1.0"
