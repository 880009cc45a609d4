"""Differential testing toolkit for Cypher graph database engines."""

__version__ = "0.1.0"
