"""Superactivation of zero-error capacity: channel constructions and certificates."""

__version__ = "0.1.0"
