"""
Online Proportional Fair (OPF) policy.

Adaptive projected online gradient ascent on the surrogate gradients
g_i = w_i * x_i / R_i^alpha. On the shared-cache family the per-user
gradients are summed onto the single cache vector.
"""
import math
from typing import Literal, Optional, Sequence

import numpy as np

from config.settings import get_settings
from src.allocation.feasible_sets import diameter as family_diameter
from src.allocation.feasible_sets import is_feasible, project, sample_integral
from src.models.allocation import AllocationMatrix, DemandMatrix, DemandTrace, FairnessParams
from src.models.policy import PolicyState, RunRecord
from src.utils.errors import DataError, DimensionError
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

Mode = Literal["fractional", "integral"]


def _params(alpha: float, weights=None, mu=None) -> FairnessParams:
    try:
        return FairnessParams(alpha=alpha, mu=mu, weights=None if weights is None else tuple(weights))
    except ValueError as e:
        raise DataError(f"invalid fairness parameters: {e}") from e


def init_policy(
    family,
    alpha: float,
    seed: int = 0,
    mode: Mode = "fractional",
    step_scale: Optional[float] = None,
    diameter: Optional[float] = None,
    weights: Optional[Sequence[float]] = None,
    mu: Optional[float] = None,
) -> PolicyState:
    """
    Fresh policy at the uniform point with unit rewards.

    Args:
        family: Feasible family
        alpha: Fairness exponent in [0, 1)
        seed: Seed of the integral-mode sampler
        mode: "fractional" or "integral"
        step_scale: Multiplier on D / sqrt(S); defaults to STEP_SCALE
        diameter: Diameter bound D; defaults to the family's
        weights: Per-agent weights, all ones when omitted
        mu: Scale of the starting point; defaults to the family's

    Returns:
        Initialized PolicyState

    Raises:
        DataError: If alpha, weights, mu, step scale or diameter are invalid
    """
    if mode not in ("fractional", "integral"):
        raise DataError(f"unknown mode {mode!r}")
    params = _params(alpha, weights, mu)
    params.validate_for(family)

    scale = get_settings().STEP_SCALE if step_scale is None else step_scale
    D = family_diameter(family) if diameter is None else diameter
    if scale <= 0 or D <= 0:
        raise DataError("step scale and diameter must be positive")

    m = family.n_agents
    return PolicyState(
        family=family,
        alpha=float(alpha),
        weights=params.weight_vector(m),
        R=np.ones(m),
        S=0.0,
        y=np.full(family.decision_shape, params.resolved_mu(family)),
        D=float(D),
        step_scale=float(scale),
        mode=mode,
        rng=np.random.default_rng(seed) if mode == "integral" else None,
    )


def act(state: PolicyState) -> AllocationMatrix:
    """
    Allocation for the coming round.

    Fractional mode returns the current point; integral mode draws an integral
    allocation with that expectation and keeps it for the next feed.
    """
    if state.mode == "integral":
        state.last_sample = sample_integral(state.family, state.y, state.rng)
        return AllocationMatrix.from_decision(state.family, state.last_sample)
    return AllocationMatrix.from_decision(state.family, state.y)


def feed(state: PolicyState, demand: DemandMatrix) -> PolicyState:
    """
    Reveal this round's demand: accrue rewards, then take one gradient step.

    The state is updated in place and returned.

    Raises:
        DimensionError: If the demand shape does not match the family
    """
    family = state.family
    X = demand.entries
    if X.shape != (family.n_resources, family.n_agents):
        raise DimensionError(
            f"demand must be {family.n_resources} x {family.n_agents} for this family, got {X.shape}"
        )

    increment = np.einsum("ji,ji->i", X, family.to_allocation(state.y))
    state.R = state.R + increment
    state.last_increment = increment
    if state.mode == "integral" and state.last_sample is not None:
        state.last_realized = np.einsum("ji,ji->i", X, family.to_allocation(state.last_sample))
        state.last_sample = None

    G = X * (state.weights * state.R ** (-state.alpha))
    g = family.decision_gradient(G)
    state.last_gradient_norm = float(np.linalg.norm(G))
    state.S += float(np.dot(g.ravel(), g.ravel()))
    if state.S > 0.0:
        state.last_step = state.step_scale * state.D / math.sqrt(state.S)
        state.y = project(family, state.y + state.last_step * g)
    else:
        # no demand seen yet
        state.last_step = 0.0

    state.last_demand = X
    state.t += 1
    return state


def run_policy(
    family,
    trace: DemandTrace,
    alpha: float,
    mode: Mode = "fractional",
    seed: int = 0,
    step_scale: Optional[float] = None,
    diameter: Optional[float] = None,
    weights: Optional[Sequence[float]] = None,
    keep_allocations: bool = True,
) -> RunRecord:
    """
    Run OPF over a whole trace.

    Args:
        family: Feasible family
        trace: Demand trace of matching dimensions
        alpha: Fairness exponent in [0, 1)
        mode: "fractional" or "integral"
        seed: Integral-mode seed
        step_scale: Multiplier on D / sqrt(S)
        diameter: Override of the diameter bound
        weights: Per-agent weights
        keep_allocations: Store the T committed decisions (costly for large N)

    Returns:
        RunRecord of the run
    """
    _check_trace_matches(family, trace)
    state = init_policy(family, alpha, seed=seed, mode=mode, step_scale=step_scale,
                        diameter=diameter, weights=weights)
    T, m = trace.horizon, family.n_agents
    increments = np.zeros((T, m))
    R_history = np.ones((T + 1, m))
    gradient_norms = np.zeros(T)
    step_sizes = np.zeros(T)
    allocations = np.zeros((T,) + family.decision_shape) if keep_allocations else None
    samples = np.zeros((T,) + family.decision_shape) if mode == "integral" else None
    realized = np.zeros((T, m)) if mode == "integral" else None

    logger.debug("OPF run started", family=family.kind, T=T, alpha=alpha, mode=mode)
    for t in range(T):
        act(state)
        if allocations is not None:
            allocations[t] = state.y
        if samples is not None:
            samples[t] = state.last_sample
        feed(state, trace.round(t))
        increments[t] = state.last_increment
        R_history[t + 1] = state.R
        gradient_norms[t] = state.last_gradient_norm
        step_sizes[t] = state.last_step
        if realized is not None:
            realized[t] = state.last_realized

    logger.debug("OPF run finished", T=T, min_R=float(state.R.min()), S=state.S)
    return RunRecord(
        family=family,
        alpha=float(alpha),
        mode=mode,
        trace=trace,
        weights=state.weights,
        increments=increments,
        R_history=R_history,
        gradient_norms=gradient_norms,
        step_sizes=step_sizes,
        allocations=allocations,
        samples=samples,
        realized_increments=realized,
        seed=seed,
    )


def record_allocations(family, trace: DemandTrace, alpha: float, decisions,
                       weights: Optional[Sequence[float]] = None) -> RunRecord:
    """
    RunRecord for a fixed sequence of decisions instead of OPF play.

    Step sizes are recorded as zero.

    Raises:
        DimensionError: If there is not one decision per round
        DataError: If any decision is infeasible
    """
    _check_trace_matches(family, trace)
    decisions = np.asarray(decisions, dtype=float)
    T, m = trace.horizon, family.n_agents
    if decisions.shape != (T,) + family.decision_shape:
        raise DimensionError(f"expected decisions of shape {(T,) + family.decision_shape}, got {decisions.shape}")
    w = _params(alpha, weights).weight_vector(m)

    increments = np.zeros((T, m))
    R_history = np.ones((T + 1, m))
    gradient_norms = np.zeros(T)
    for t in range(T):
        if not is_feasible(family, decisions[t]):
            raise DataError(f"decision for round {t + 1} is not feasible")
        X = trace.round_array(t)
        increments[t] = np.einsum("ji,ji->i", X, family.to_allocation(decisions[t]))
        R_history[t + 1] = R_history[t] + increments[t]
        gradient_norms[t] = float(np.linalg.norm(X * (w * R_history[t + 1] ** (-alpha))))

    return RunRecord(
        family=family,
        alpha=float(alpha),
        mode="fractional",
        trace=trace,
        weights=w,
        increments=increments,
        R_history=R_history,
        gradient_norms=gradient_norms,
        step_sizes=np.zeros(T),
        allocations=decisions.copy(),
    )


def _check_trace_matches(family, trace: DemandTrace) -> None:
    if (trace.N, trace.m) != (family.n_resources, family.n_agents):
        raise DimensionError(
            f"trace is {trace.N} x {trace.m} but the {family.kind} family needs "
            f"{family.n_resources} x {family.n_agents}"
        )
    if trace.family != family.kind:
        raise DataError(f"trace was built for the {trace.family} family, not {family.kind}")
