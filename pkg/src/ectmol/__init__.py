"""Euler Characteristic Transform descriptors for molecules parsed from SMILES."""

__version__ = "0.1.0"
