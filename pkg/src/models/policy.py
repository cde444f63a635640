"""
Online policy state and run records.
"""
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from src.models.allocation import DemandTrace
from src.utils.errors import DataError

Mode = Literal["fractional", "integral"]


@dataclass
class PolicyState:
    """
    Mutable state of one OPF run. Single owner: act and feed must not
    interleave across threads.
    """
    family: object
    alpha: float
    weights: np.ndarray
    R: np.ndarray
    S: float
    y: np.ndarray
    D: float
    step_scale: float
    mode: Mode = "fractional"
    rng: Optional[np.random.Generator] = None
    t: int = 0
    last_demand: Optional[np.ndarray] = None
    last_sample: Optional[np.ndarray] = None
    # bookkeeping of the most recent feed
    last_increment: Optional[np.ndarray] = None
    last_realized: Optional[np.ndarray] = None
    last_gradient_norm: float = 0.0
    last_step: float = 0.0


@dataclass
class RunRecord:
    """
    Per-round history of a run over a trace.

    Row t of allocations is the decision committed before round t's demand;
    R_history row t is the reward vector before round t, so it has T + 1 rows.
    """
    family: object
    alpha: float
    mode: Mode
    trace: DemandTrace
    weights: np.ndarray
    increments: np.ndarray
    R_history: np.ndarray
    gradient_norms: np.ndarray
    step_sizes: np.ndarray
    allocations: Optional[np.ndarray] = None
    samples: Optional[np.ndarray] = None
    realized_increments: Optional[np.ndarray] = None
    seed: int = 0

    @property
    def horizon(self) -> int:
        return self.increments.shape[0]

    @property
    def final_R(self) -> np.ndarray:
        return self.R_history[-1]

    @property
    def raw_R(self) -> np.ndarray:
        """Final rewards without the unit starting offset."""
        return self.R_history[-1] - 1.0

    @property
    def realized_R(self) -> Optional[np.ndarray]:
        """Final rewards of the sampled integral allocations, offset included."""
        if self.realized_increments is None:
            return None
        return 1.0 + self.realized_increments.sum(axis=0)

    def prefix(self, T: int) -> "RunRecord":
        """The record of the first T rounds, identical to a fresh run of length T."""
        if not 1 <= T <= self.horizon:
            raise DataError(f"prefix length {T} outside [1, {self.horizon}]")
        return RunRecord(
            family=self.family,
            alpha=self.alpha,
            mode=self.mode,
            trace=self.trace.prefix(T),
            weights=self.weights,
            increments=self.increments[:T],
            R_history=self.R_history[: T + 1],
            gradient_norms=self.gradient_norms[:T],
            step_sizes=self.step_sizes[:T],
            allocations=None if self.allocations is None else self.allocations[:T],
            samples=None if self.samples is None else self.samples[:T],
            realized_increments=None if self.realized_increments is None else self.realized_increments[:T],
            seed=self.seed,
        )
