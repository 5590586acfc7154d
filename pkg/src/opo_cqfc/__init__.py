"""Squeezing optimization for OPO networks under coherent feedback."""
__version__ = "0.1.0"
