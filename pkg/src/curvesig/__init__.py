"""Learned and axiomatic differential invariants of planar curves."""

__version__ = "0.1.0"
