"""Structural example retrieval and prompting for event causality identification."""

__version__ = "0.1.0"
