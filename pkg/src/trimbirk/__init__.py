"""Trimmed Birkhoff sums of singular observables over irrational rotations."""

__version__ = "0.1.0"
