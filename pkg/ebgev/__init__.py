"""Empirical-Bayes inference for generalized extreme-value block maxima."""

__version__ = "0.1.0"
