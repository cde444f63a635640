"""Experiment workflows."""