"""
Static offline comparators and diagnostics.

The offline objective over a fixed decision y is
F(y) = sum_i w_i * phi(<C_i, y_i>), with C the cumulative demand.
"""
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config.settings import get_settings
from src.allocation.fairness import aggregate_fairness, approx_factor, phi
from src.allocation.feasible_sets import diameter, grid_points, lmo, project
from src.models.allocation import DemandTrace
from src.models.offline import OfflineSolution
from src.models.policy import RunRecord
from src.utils.errors import ConvergenceError, DataError, DimensionError
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

# Keeps phi' finite for agents with no reward at the current point
_REWARD_FLOOR = 1e-12
_ARMIJO = 1e-4
_MAX_HALVINGS = 60


def _weights(weights, m: int) -> np.ndarray:
    if weights is None:
        return np.ones(m)
    w = np.asarray(weights, dtype=float)
    if w.shape != (m,):
        raise DimensionError(f"{w.size} weights for {m} agents")
    return w


def _per_agent_rewards(family, C: np.ndarray, decision: np.ndarray) -> np.ndarray:
    return np.einsum("ji,ji->i", C, family.to_allocation(decision))


def fairness_objective(family, trace: DemandTrace, alpha: float, decision,
                       weights: Optional[Sequence[float]] = None) -> float:
    """Aggregate fairness of playing one fixed decision in every round."""
    C = trace.cumulative_demand()
    w = _weights(weights, family.n_agents)
    return aggregate_fairness(alpha, w, _per_agent_rewards(family, C, np.asarray(decision, dtype=float)))


def offline_optimal(family, trace: DemandTrace, alpha: float, tol: Optional[float] = None,
                    weights: Optional[Sequence[float]] = None,
                    max_iter: Optional[int] = None) -> OfflineSolution:
    """
    Maximize F over the family by projected gradient ascent.

    Steps start at D / ||grad|| and follow an Armijo backtracking rule
    (halve on failure, grow by 1.5 on success). The Frank-Wolfe gap
    <grad F, lmo(grad F) - y> bounds the suboptimality and is the stopping
    test. At alpha = 0 the objective is linear and the LMO vertex is exact.

    Args:
        family: Feasible family
        trace: Demand trace
        alpha: Fairness exponent in [0, 1)
        tol: Gap tolerance; defaults to OFFLINE_REL_TOL * T^(1 - alpha)
        weights: Per-agent weights
        max_iter: Iteration cap; defaults to OFFLINE_MAX_ITER

    Returns:
        OfflineSolution with the final gap and iteration count

    Raises:
        DataError: If tol is not positive
        ConvergenceError: If the gap is still above tol at the cap
    """
    settings = get_settings()
    T = trace.horizon
    tol = settings.OFFLINE_REL_TOL * T ** (1.0 - alpha) if tol is None else tol
    if tol <= 0:
        raise DataError("offline tolerance must be positive")
    max_iter = settings.OFFLINE_MAX_ITER if max_iter is None else max_iter
    C = trace.cumulative_demand()
    w = _weights(weights, family.n_agents)

    def value(y: np.ndarray) -> float:
        return aggregate_fairness(alpha, w, _per_agent_rewards(family, C, y))

    def gradient(y: np.ndarray) -> np.ndarray:
        R = np.maximum(_per_agent_rewards(family, C, y), _REWARD_FLOOR)
        return family.decision_gradient(C * (w * R ** (-alpha)))

    if alpha == 0.0:
        y = lmo(family, family.decision_gradient(C * w))
        return _solution(family, C, alpha, w, y, 0.0, 0)

    y = family.uniform_point()
    F = value(y)
    g = gradient(y)
    step = diameter(family) / max(float(np.linalg.norm(g)), _REWARD_FLOOR)
    gap = math.inf
    for it in range(1, max_iter + 1):
        gap = float(np.sum(g * (lmo(family, g) - y)))
        if gap <= tol:
            logger.debug("offline optimum found", iterations=it, gap=gap, T=T, alpha=alpha)
            return _solution(family, C, alpha, w, y, gap, it)

        for _ in range(_MAX_HALVINGS):
            candidate = project(family, y + step * g)
            F_new = value(candidate)
            if F_new >= F + _ARMIJO * float(np.sum(g * (candidate - y))):
                break
            step /= 2.0
        else:
            # no ascent left at machine precision; the gap is as small as it gets
            logger.warning("offline line search stalled", gap=gap, tol=tol, iterations=it)
            if gap <= 10 * tol:
                return _solution(family, C, alpha, w, y, gap, it)
            raise ConvergenceError("offline line search stalled", gap, it)

        y, F = candidate, F_new
        g = gradient(y)
        step *= 1.5

    raise ConvergenceError("offline solver hit the iteration cap", gap, max_iter)


def _solution(family, C, alpha, w, y, gap, iterations) -> OfflineSolution:
    R = _per_agent_rewards(family, C, y)
    return OfflineSolution(
        y_star=y,
        value=aggregate_fairness(alpha, w, R),
        per_agent_R=R,
        fw_gap=gap,
        iterations=iterations,
    )


def scheduling_closed_form(R_tot, alpha: float) -> OfflineSolution:
    """
    Exact scheduling optimum: y*_i proportional to R_i^((1-alpha)/alpha).

    Args:
        R_tot: Positive per-machine total rewards
        alpha: Fairness exponent in (0, 1)

    Returns:
        OfflineSolution; its value equals (1-alpha)^-1 (sum_i R_i^((1-alpha)/alpha))^alpha

    Raises:
        DataError: For alpha = 0 (use the LMO) or nonpositive rewards
    """
    if not 0.0 < alpha < 1.0:
        raise DataError(f"closed form needs alpha in (0, 1), got {alpha!r}")
    R = np.asarray(R_tot, dtype=float)
    if R.ndim != 1 or R.size == 0 or not np.all(np.isfinite(R)) or R.min() <= 0:
        raise DataError("per-machine rewards must be positive")
    z = R ** ((1.0 - alpha) / alpha)
    y = z / z.sum()
    per_agent = R * y
    return OfflineSolution(y_star=y, value=aggregate_fairness(alpha, None, per_agent), per_agent_R=per_agent)


def brute_force_offline(family, trace: DemandTrace, alpha: float, grid_step: float,
                        weights: Optional[Sequence[float]] = None) -> float:
    """
    Exhaustive grid search of F over a tiny family.

    Grid points are multiples of grid_step, so halving the step refines
    the grid.

    Raises:
        DataError: If the family is too large or grid_step does not divide 1
    """
    if family.kind == "cache" and family.m > 2:
        raise DataError("cache family too large for brute force")
    Y = grid_points(family, grid_step)
    C = trace.cumulative_demand()
    w = _weights(weights, family.n_agents)
    if family.kind == "cache":
        R = Y @ C
    elif family.kind == "sched":
        R = Y * C[0]
    else:
        R = np.einsum("pji,ji->pi", Y, C)
    values = (np.maximum(R, 0.0) ** (1.0 - alpha) / (1.0 - alpha)) @ w
    return float(values.max())


def _summed_gradient(run: RunRecord, alpha: float, T: int) -> Tuple[np.ndarray, float]:
    """Sum over the first T rounds of w_i R_i(t)^-alpha x_i(t), and the online surrogate term."""
    coef = run.weights * run.R_history[:T] ** (-alpha)
    online = float(np.sum(coef * run.increments[:T]))
    trace = run.trace
    if trace.is_one_hot:
        G = np.zeros((trace.N, trace.m))
        cols = np.broadcast_to(np.arange(trace.m), (T, trace.m))
        np.add.at(G, (trace.one_hot[:T], cols), coef)
    else:
        G = np.einsum("tni,ti->ni", trace.dense[:T], coef)
    return G, online


def surrogate_regret_path(run: RunRecord, family, alpha: float, horizons: Sequence[int]) -> List[float]:
    """Surrogate linear regret of the run's prefixes at each horizon."""
    out = []
    for T in horizons:
        if not 1 <= T <= run.horizon:
            raise DataError(f"horizon {T} outside [1, {run.horizon}]")
        G, online = _summed_gradient(run, alpha, T)
        g = family.decision_gradient(G)
        best = float(np.sum(g * lmo(family, g)))
        out.append(best - online)
    return out


def surrogate_regret(run: RunRecord, family, alpha: float) -> float:
    """
    Regret of the run on the linear surrogate problem.

    Uses same-round demands x_i(t) and the rewards R_i(t) before each round;
    the best static comparator is an LMO vertex of the summed gradient.
    """
    return surrogate_regret_path(run, family, alpha, [run.horizon])[0]


def nonconvexity_function(x: float, y: float, alpha: float) -> float:
    """f(x, y) = (x^p + y^p)^alpha with p = (1 - alpha) / alpha."""
    p = (1.0 - alpha) / alpha
    return (x ** p + y ** p) ** alpha


def nonconvexity_diagnostics(x: float, y: float, alpha: float) -> Tuple[float, float]:
    """
    Hessian determinant of f at (x, y) and d2f/dx2 at (1, 1).

    The determinant has the sign of 2*alpha - 1.

    Raises:
        DataError: If x, y are not positive or alpha is outside (0, 1)
    """
    if not 0.0 < alpha < 1.0:
        raise DataError(f"alpha={alpha!r} outside (0, 1)")
    if not (x > 0 and y > 0):
        raise DataError("x and y must be positive")
    p = 1.0 / alpha - 1.0
    num = (alpha - 1.0) ** 2 * x ** p * y ** p * (x ** p + y ** p) ** (2 * alpha)
    den = (y * x ** (1.0 / alpha) + x * y ** (1.0 / alpha)) ** 2
    det = (2 * alpha - 1.0) * num / den
    d2 = -(2.0 ** (alpha - 2.0)) * (1.0 - alpha) * (alpha ** 2 + 2 * alpha - 1.0) / alpha
    return float(det), float(d2)


def uniform_floor(family, trace: DemandTrace, alpha: float, delta: float,
                  weights: Optional[Sequence[float]] = None) -> Tuple[float, float]:
    """
    Value at the uniform point and the floor sum_i w_i phi(mu * delta * T).

    Every agent collects at least mu * delta per round at the uniform point.
    """
    w = _weights(weights, family.n_agents)
    at_uniform = fairness_objective(family, trace, alpha, family.uniform_point(), w)
    floor = float(np.dot(w, np.full(family.n_agents, phi(alpha, family.mu * delta * trace.horizon))))
    return at_uniform, floor


def regret_bound_gap(offline_value: float, run: RunRecord, alpha: float, surrogate: float) -> float:
    """
    (1-alpha)^alpha * surrogate - c_alpha regret; nonnegative on every run.
    """
    c_regret = offline_value - approx_factor(alpha) * aggregate_fairness(alpha, run.weights, run.final_R)
    return (1.0 - alpha) ** alpha * surrogate - c_regret
