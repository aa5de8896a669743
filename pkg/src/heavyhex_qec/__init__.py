"""Rotated surface code on a heavy-hexagonal lattice: circuits, noise, sampling, decoding, injection."""

from .lattice import build_layout, injection_layout, qubit_counts

__version__ = "0.1.0"
__all__ = ["build_layout", "injection_layout", "qubit_counts"]
