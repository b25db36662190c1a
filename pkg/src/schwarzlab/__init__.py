"""Schwarzian-derivative laboratory for planar harmonic mappings."""

__version__ = "0.1.0"
