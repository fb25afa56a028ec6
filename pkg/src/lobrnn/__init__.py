"""Limit-order-book price-flip classification with an Elman RNN."""

__version__ = "0.1.0"
