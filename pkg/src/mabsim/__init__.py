"""Collaborative multi-armed bandit simulator with exact communication accounting."""

__version__ = "0.1.0"
