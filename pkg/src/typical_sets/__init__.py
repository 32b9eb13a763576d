"""Exact-rational tools for finite approximations of typical compact sets."""

__version__ = "0.1.0"
