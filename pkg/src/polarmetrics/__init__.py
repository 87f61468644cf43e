"""Partisan sentiment polarization pipeline for event-window tweet corpora."""

__version__ = "0.1.0"
