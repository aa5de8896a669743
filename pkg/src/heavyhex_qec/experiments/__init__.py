"""Threshold sweeps, scaling fits and magic-state injection analysis."""
