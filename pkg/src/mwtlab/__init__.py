"""Minimum-weight triangulation workbench: LP relaxation, heuristics, rounding."""
