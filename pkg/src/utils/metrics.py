"""
Regret and growth-rate metrics.
"""
import math
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from src.allocation.fairness import aggregate_fairness, approx_factor
from src.utils.errors import DataError


def c_alpha_regret(offline_value: float, online_R, alpha: float,
                   weights: Optional[Sequence[float]] = None) -> float:
    """offline_value - c_alpha * sum_i w_i phi(R_i)."""
    return offline_value - approx_factor(alpha) * aggregate_fairness(alpha, weights, online_R)


def slope_fit(points: Iterable[Tuple[float, float]]) -> float:
    """
    Least-squares slope of log(value) against log(T).

    Raises:
        DataError: With fewer than 4 points or a nonpositive T or value
    """
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 4 or pts.shape[1] != 2:
        raise DataError("slope fit needs at least 4 (T, value) points")
    if pts.min() <= 0:
        raise DataError("slope fit needs positive horizons and values")
    slope, _ = np.polyfit(np.log(pts[:, 0]), np.log(pts[:, 1]), 1)
    return float(slope)


def hoeffding_radius(T: int, m: int, confidence: float = 0.01) -> float:
    """Deviation bound sqrt(T ln(2 m T / confidence) / 2) on every agent's integral reward."""
    if T < 1 or m < 1 or not 0.0 < confidence < 1.0:
        raise DataError("Hoeffding radius needs T, m >= 1 and confidence in (0, 1)")
    return math.sqrt(T * math.log(2 * m * T / confidence) / 2.0)


def expected_slope(alpha: float) -> float:
    """Growth exponent of the surrogate regret: max(0, 1/2 - alpha)."""
    return max(0.0, 0.5 - alpha)


def regime(alpha: float) -> str:
    if alpha < 0.5:
        return "T^(1/2-alpha)"
    if alpha == 0.5:
        return "sqrt(log T)"
    return "O(1)"
