"""Killed exponential functionals of Lévy processes: simulation and distributional equations."""
