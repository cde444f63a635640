"""
Reward bookkeeping and demand-trace validation.
"""
from typing import List

import numpy as np

from src.models.allocation import (
    AllocationMatrix,
    DemandMatrix,
    DemandTrace,
    FairnessParams,
    RewardState,
    TraceViolation,
)
from src.utils.errors import DimensionError
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

# Absolute slack on the demand-norm bounds
_NORM_TOL = 1e-12


def initial_reward_state(m: int) -> RewardState:
    """All agents start at reward one."""
    return RewardState(np.ones(m), 0)


def validate_trace(trace: DemandTrace, params: FairnessParams) -> List[TraceViolation]:
    """
    Check every demand column against delta <= ||x_i(t)||_1 <= 1.

    Args:
        trace: Demand trace
        params: Fairness parameters carrying delta (and weights, if any)

    Returns:
        Violations in round order, then agent order; empty when the trace is valid
    """
    violations: List[TraceViolation] = []
    if params.weights is not None and len(params.weights) != trace.m:
        violations.append(TraceViolation(round=0, agent=0, kind="dimension", value=float(len(params.weights))))

    minima = trace.column_minima()
    norms = trace.column_norms()
    negative = minima < 0
    below = norms < params.delta - _NORM_TOL
    above = norms > 1.0 + _NORM_TOL
    for t, i in zip(*np.nonzero(negative | below | above)):
        if negative[t, i]:
            violations.append(TraceViolation(round=t + 1, agent=i + 1, kind="negative", value=float(minima[t, i])))
        if below[t, i]:
            violations.append(TraceViolation(round=t + 1, agent=i + 1, kind="below_delta", value=float(norms[t, i])))
        if above[t, i]:
            violations.append(TraceViolation(round=t + 1, agent=i + 1, kind="above_one", value=float(norms[t, i])))

    if violations:
        logger.debug("trace violations found", count=len(violations), horizon=trace.horizon)
    return violations


def accrue(state: RewardState, demand: DemandMatrix, alloc: AllocationMatrix) -> RewardState:
    """
    Add this round's rewards <x_i, y_i> to every agent.

    Raises:
        DimensionError: If the demand, allocation and state shapes disagree
    """
    if demand.shape != alloc.shape:
        raise DimensionError(f"demand shape {demand.shape} does not match allocation shape {alloc.shape}")
    if demand.shape[1] != state.R.size:
        raise DimensionError(f"{demand.shape[1]} agents in demand, {state.R.size} in reward state")
    increments = np.einsum("ji,ji->i", demand.entries, alloc.entries)
    return RewardState(state.R + increments, state.t + 1)
