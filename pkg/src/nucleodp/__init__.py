"""Exact nucleolus computation for compactly represented cooperative games."""

__version__ = "0.1.0"
