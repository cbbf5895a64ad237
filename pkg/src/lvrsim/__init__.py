"""Simulation of LVR-retaining AMM hooks and option-style valuation of extractable value."""

__version__ = "0.1.0"
