"""Fairness-aware wrapper feature selection with genetic algorithms and NSGA-II."""

__version__ = "0.1.0"
