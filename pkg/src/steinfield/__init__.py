"""Gaussian random fields on spheres, wide random networks and Stein checks."""

__version__ = "0.1.0"
