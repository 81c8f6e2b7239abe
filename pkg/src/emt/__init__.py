"""Desk-scale engine for positive computable structure theory."""

__version__ = "0.1.0"
