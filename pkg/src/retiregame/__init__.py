"""Optimal retirement with job switching and a borrowing constraint, solved through its dual game."""

__version__ = "0.1.0"
