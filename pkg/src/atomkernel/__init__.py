"""Sparse recovery of atomic measures from kernel-space measurements."""

__version__ = "0.1.0"
