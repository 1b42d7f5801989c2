"""Weekly bug-arrival forecasting."""

__version__ = "0.1.0"
