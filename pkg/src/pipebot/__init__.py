"""Quasi-static in-pipe inspection robot simulator and control stack."""

__version__ = "0.1.0"
