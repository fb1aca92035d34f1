"""Scripted vs spontaneous speech classification toolkit."""

__version__ = "1.0.0"
