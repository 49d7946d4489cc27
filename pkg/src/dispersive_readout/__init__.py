"""Dispersive qubit readout with a photon-number-resolving detector."""

__version__ = "0.1.0"
