"""Numerical toolkit for Delaunay surfaces, their Jacobi fields and neck gluing."""

__version__ = "0.1.0"
