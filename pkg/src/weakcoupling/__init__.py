"""Weakly coupled eigenvalues of -Delta - beta V in one and two dimensions."""

__version__ = "0.1.0"
