"""Hyperbolic graphs, visual metrics and canonical measures for expanding
branched-covering dynamical systems given by finite combinatorial data."""

__version__ = "0.1.0"
