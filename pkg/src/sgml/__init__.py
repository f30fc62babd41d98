"""Desk-scale smart-grid cyber range compiled from SG-ML model files."""

__version__ = "0.1.0"
