"""Twisted periodic cyclic homology of dg categories over a polynomial ring."""

__version__ = "0.1.0"
