"""Simulated thumb-ring proximity sensing and micro-finger-pose recognition."""

__version__ = "0.1.0"
