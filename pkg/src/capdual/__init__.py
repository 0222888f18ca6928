"""Capacities, conformal structure and weighted path metrics on planar polygonal domains."""
__version__ = "0.1.0"
