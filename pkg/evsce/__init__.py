"""Elliptic Volatility Sample Covariance Ensemble toolkit."""

__version__ = "0.1.0"
