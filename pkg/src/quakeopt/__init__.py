"""Seismic-epicenter multiobjective optimizer for quantum-network entanglement allocation."""

__version__ = "0.1.0"
