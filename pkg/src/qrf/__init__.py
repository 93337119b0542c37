"""Quantum-reference-frame transformations for 1-D Galilean particles."""

__version__ = "0.1.0"
