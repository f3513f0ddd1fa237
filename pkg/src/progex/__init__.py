"""Progressive explanation generation for planning-model differences."""

__version__ = "0.1.0"
