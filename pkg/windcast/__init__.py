"""Offshore wind speed and power forecasting toolkit."""

__version__ = "1.0.0"
