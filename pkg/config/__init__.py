"""Configuration modules for fairalloc."""
