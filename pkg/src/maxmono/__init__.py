"""Finite-dimensional toolkit for monotone operators and convex subdifferentials."""

__version__ = "0.1.0"
