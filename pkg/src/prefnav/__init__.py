"""Robot navigation to an unknown goal under human path preferences."""

__version__ = "0.1.0"
