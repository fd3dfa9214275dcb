"""Supermajority sentiment detection on Ising-model social networks."""

__version__ = "0.1.0"
