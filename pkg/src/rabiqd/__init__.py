"""Quantum discord and Otto-cycle work in the multiqubit Rabi model."""

__version__ = "0.1.0"
