"""Operators built from generalized Riesz bases, in the diagonal model."""

__version__ = "0.1.0"
