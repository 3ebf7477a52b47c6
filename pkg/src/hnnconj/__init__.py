"""Conjugacy search in HNN-extensions of free groups and in Miller's groups."""

__version__ = "0.1.0"
