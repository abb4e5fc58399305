"""Renormalization and thermodynamic formalism for the Fibonacci substitution."""

__version__ = "0.1.0"
