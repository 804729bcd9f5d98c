"""Multi-step short-term wind speed forecasting toolkit."""

__version__ = "0.1.0"
