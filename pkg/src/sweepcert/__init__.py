"""Frobenius-Perron operators, Lyapunov density certificates and sweeping diagnostics."""

__version__ = "0.1.0"
