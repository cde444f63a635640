"""Utility modules for fairalloc."""
