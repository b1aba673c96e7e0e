"""Numerical tests of linear convexity for domains in C^2."""

__version__ = "0.1.0"
