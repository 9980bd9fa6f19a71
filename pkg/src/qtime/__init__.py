"""Arrival-time distributions, Bohmian trajectories and resonance decay bounds for
one-dimensional free packets and compactly supported step potentials (hbar = 1)."""

__version__ = "0.1.0"
