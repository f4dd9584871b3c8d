"""Typological diversity measures for language samples."""

__version__ = "0.1.0"
