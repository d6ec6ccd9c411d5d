"""Sorting networks compiled to exact ReLU networks, and the identity task."""

__version__ = "0.1.0"
