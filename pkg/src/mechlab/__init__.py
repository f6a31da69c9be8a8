"""Exact-rational laboratory for single-buyer multi-good mechanism design."""
