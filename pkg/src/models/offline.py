"""
Offline comparator result.
"""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class OfflineSolution:
    """Best static allocation for a trace and its aggregate fairness."""
    y_star: np.ndarray
    value: float
    per_agent_R: np.ndarray
    fw_gap: float = 0.0
    iterations: int = 0
