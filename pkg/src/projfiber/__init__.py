"""Projective fiber maps: deciding when a dynamical system has a coarser deterministic level."""

__version__ = "0.1.0"
