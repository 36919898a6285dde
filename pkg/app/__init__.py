"""Nodal Census Lab - nodal domains of random spherical harmonics"""

__version__ = "0.1.0"
