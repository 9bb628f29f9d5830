"""heavytail-lab: Monte Carlo laboratory for critical percolation on
heavy-tailed configuration models."""

__version__ = "0.1.0"
