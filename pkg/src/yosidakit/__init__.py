"""Yosida approximants of homogeneous monotone operators and annulus root search."""

__version__ = "0.1.0"
