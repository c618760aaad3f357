"""Genuine multipartite entanglement (generalized geometric measure) of spin-1/2
ground states, and the bound-GGM phase detector built on it."""

__version__ = "0.1.0"
