"""
Alpha-fair utility, its derivative, aggregate fairness, the approximation
factor c_alpha and the two-instance lower-bound ratio.
"""
from typing import Iterable, List, Optional, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar

from config.settings import get_settings
from src.models.experiment import BoundPoint
from src.utils.errors import DataError, DimensionError

ArrayLike = Union[float, np.ndarray]


def _check_alpha(alpha: float, open_left: bool = False) -> None:
    low_ok = alpha > 0.0 if open_left else alpha >= 0.0
    if not (np.isfinite(alpha) and low_ok and alpha < 1.0):
        interval = "(0, 1)" if open_left else "[0, 1)"
        raise DataError(f"alpha={alpha!r} outside {interval}")


def _scalar_or_array(x: np.ndarray) -> ArrayLike:
    return float(x) if x.ndim == 0 else x


def phi(alpha: float, r: ArrayLike) -> ArrayLike:
    """Utility r^(1-alpha) / (1-alpha); vectorized over r."""
    _check_alpha(alpha)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DataError("utility is defined for nonnegative rewards only")
    return _scalar_or_array(r ** (1.0 - alpha) / (1.0 - alpha))


def phi_prime(alpha: float, r: ArrayLike) -> ArrayLike:
    """Derivative r^(-alpha) of the utility; vectorized over r > 0."""
    _check_alpha(alpha)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DataError("utility derivative needs positive rewards")
    return _scalar_or_array(r ** (-alpha))


def aggregate_fairness(alpha: float, weights: Optional[Iterable[float]], R) -> float:
    """
    Weighted sum of per-agent utilities.

    Args:
        alpha: Fairness exponent in [0, 1)
        weights: Per-agent weights, None for all ones
        R: Per-agent cumulative rewards

    Returns:
        sum_i w_i * phi(R_i)
    """
    R = np.asarray(R, dtype=float)
    w = np.ones(R.shape) if weights is None else np.asarray(list(weights), dtype=float)
    if w.shape != R.shape:
        raise DimensionError(f"{w.size} weights for {R.size} agents")
    return float(np.dot(w, np.atleast_1d(phi(alpha, R))))


def approx_factor(alpha: float) -> float:
    """c_alpha = (1-alpha)^-(1-alpha); equals 1 at alpha = 0."""
    _check_alpha(alpha)
    return float((1.0 - alpha) ** (-(1.0 - alpha)))


def lb_ratio_at(alpha: float, eta: ArrayLike) -> ArrayLike:
    """Ratio of the two lower-bound instance optima for a phase split eta."""
    e = np.asarray(eta, dtype=float)
    p = 1.0 - alpha
    num = e ** p + (1.0 - e) ** p
    den = (1.0 - e / 2.0) ** p + (e / 2.0) ** p
    return _scalar_or_array(num / den)


def lb_ratio(alpha: float, grid_step: Optional[float] = None,
             refine_tol: Optional[float] = None) -> Tuple[float, float]:
    """
    Largest lower-bound ratio over eta in [0, 1/2].

    Grid search, then golden-section refinement inside the bracket formed by
    the best grid point and its two neighbours.

    Args:
        alpha: Fairness exponent in (0, 1)
        grid_step: Grid resolution
        refine_tol: Refinement tolerance on eta

    Returns:
        (ratio, eta_star)
    """
    _check_alpha(alpha, open_left=True)
    settings = get_settings()
    step = settings.LB_GRID_STEP if grid_step is None else grid_step
    xtol = settings.LB_REFINE_TOL if refine_tol is None else refine_tol

    n = int(round(0.5 / step))
    grid = np.linspace(0.0, 0.5, n + 1)
    values = lb_ratio_at(alpha, grid)
    i = int(np.argmax(values))
    best_eta, best = float(grid[i]), float(values[i])

    if 0 < i < n and values[i] > values[i - 1] and values[i] > values[i + 1]:
        res = minimize_scalar(lambda e: -lb_ratio_at(alpha, e), method="golden",
                              bracket=(grid[i - 1], grid[i], grid[i + 1]), options={"xtol": xtol})
        eta = float(np.clip(res.x, 0.0, 0.5))
        value = float(lb_ratio_at(alpha, eta))
        if res.success and value > best:
            best_eta, best = eta, value
    return best, best_eta


def lb_ratio_curve(alphas: Iterable[float]) -> List[BoundPoint]:
    """Lower and upper approximation bounds over a grid of alphas."""
    points = []
    for alpha in alphas:
        ratio, eta = lb_ratio(alpha)
        c = approx_factor(alpha)
        points.append(BoundPoint(alpha=alpha, lb_ratio=ratio, eta_star=eta, c_alpha=c, gap=c - ratio))
    return points
