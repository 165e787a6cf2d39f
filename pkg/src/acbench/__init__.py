"""Activity-cliff benchmarking for QSAR models."""

__version__ = "0.1.0"
