"""Joint pointer-network parser for argument structure."""

__version__ = "0.1.0"
