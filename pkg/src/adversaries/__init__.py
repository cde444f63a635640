"""Demand-trace generators."""