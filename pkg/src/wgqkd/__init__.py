"""Decoy-state QKD with photon sources made by waveguide scattering."""

__version__ = "0.1.0"
