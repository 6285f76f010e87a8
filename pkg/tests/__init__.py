"""Pytest package for chupscale."""
