"""Offline comparators and diagnostics."""