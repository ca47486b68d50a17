"""Desk-scale simulator of a mediated-entanglement circuit, its photonic
implementation and an entanglement-certification battery."""

__version__ = "0.1.0"
