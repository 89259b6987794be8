"""Face-mask recognition pipeline built around a landmark-polygon face cut."""

__version__ = "0.1.0"
