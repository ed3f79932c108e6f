"""Composite resilience indicator for decentralized wastewater systems."""

__version__ = "0.1.0"
