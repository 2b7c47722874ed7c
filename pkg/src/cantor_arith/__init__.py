"""Exact computations with affine Cantor sets and their arithmetic differences."""

__version__ = "0.1.0"
