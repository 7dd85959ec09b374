"""Dynamics, brackets and reductions on trivialized iterated bundles of Lie groups."""

__version__ = "0.1.0"
