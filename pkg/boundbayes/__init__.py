"""Hierarchical Bayes estimation of a parameter bounded below by an uncertain bound."""

__version__ = "1.0.0"
