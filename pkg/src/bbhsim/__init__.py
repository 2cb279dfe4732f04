"""Synchronous simulator for perpetual exploration with a Byzantine black hole."""

__version__ = "0.1.0"
