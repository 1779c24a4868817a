"""Structural pass analysis from event and tracking data."""

__version__ = "0.1.0"
