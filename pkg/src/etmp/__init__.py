"""Gaze-weighted performance scoring for dialogue-based learning games."""

__version__ = "0.1.0"
