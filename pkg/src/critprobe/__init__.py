"""Semiclassical probes of critical energies from the low-lying spectrum of -hbar^2 Laplacian + V."""

__version__ = "0.1.0"
