"""Rigid distributions for interim IR auctions: construction and exact checks."""
__version__ = "0.1.0"
