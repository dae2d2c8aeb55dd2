"""Exact verification of game-theoretic solution concepts via
knowledge-based programs."""

__version__ = "1.0.0"
