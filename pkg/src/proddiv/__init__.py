"""Text-based product diversity toolkit."""

__version__ = "0.1.0"
