"""Sperner-admissible labelings of the simplex lattice and optimal simplex partitions."""

__version__ = "0.1.0"
