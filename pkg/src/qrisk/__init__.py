"""Quantum-safe migration risk assessment engine."""

__version__ = "0.1.0"
