"""Factorizing F-matrices and domain wall partition functions for U(1)^(N-1) vertex models."""

__version__ = "0.1.0"
