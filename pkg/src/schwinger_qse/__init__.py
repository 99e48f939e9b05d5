"""Quantum Krylov emulation and block-encoding cost model for the lattice Schwinger model."""

__version__ = "0.1.0"
