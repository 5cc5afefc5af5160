"""Rate-reliability (E-capacity) bounds for discrete memoryless channels."""

__version__ = "0.1.0"
