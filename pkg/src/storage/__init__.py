"""Trace file persistence."""