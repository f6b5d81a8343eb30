"""Numerical laboratory for long-range segregation of competing populations."""
__version__ = "0.1.0"
