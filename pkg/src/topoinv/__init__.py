"""Exact topological invariants of qudit stabilizer models."""

__version__ = "0.1.0"
