"""Random multi-start TSP experiments and extreme-value power-law diagnostics."""

__version__ = "0.1.0"
