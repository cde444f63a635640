"""
Demand, allocation and reward types.

Array-valued records are frozen dataclasses holding read-only numpy arrays;
scalar parameter sets are pydantic models.
"""
from dataclasses import dataclass
from typing import Iterator, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from config.settings import get_settings
from src.utils.errors import DataError, DimensionError


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class FairnessParams(BaseModel):
    """Fairness exponent, demand floor and optional agent weights for one experiment."""
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(ge=0.0, lt=1.0, description="Fairness exponent")
    delta: float = Field(default=1.0, gt=0.0, le=1.0, description="Lower bound on demand l1-norm")
    mu: Optional[float] = Field(default=None, gt=0.0, description="Uniform-point scale; None means the family's own")
    weights: Optional[Tuple[float, ...]] = None

    @field_validator("weights")
    @classmethod
    def _nonnegative_weights(cls, v: Optional[Tuple[float, ...]]) -> Optional[Tuple[float, ...]]:
        if v is not None and any((not np.isfinite(w)) or w < 0 for w in v):
            raise ValueError("weights must be finite and nonnegative")
        return v

    def resolved_mu(self, family) -> float:
        return family.mu if self.mu is None else self.mu

    def weight_vector(self, m: int) -> np.ndarray:
        """Per-agent weights as an array, all ones when unset."""
        if self.weights is None:
            return np.ones(m)
        if len(self.weights) != m:
            raise DimensionError(f"expected {m} weights, got {len(self.weights)}")
        return np.asarray(self.weights, dtype=float)

    def validate_for(self, family) -> None:
        """Check that mu times the all-ones point lies in the family."""
        mu = self.resolved_mu(family)
        point = np.full(family.decision_shape, mu)
        if not family.contains(point, get_settings().FEASIBILITY_TOL):
            raise DataError(f"mu={mu!r} does not give a feasible uniform point for the {family.kind} family")


@dataclass(frozen=True, eq=False)
class DemandMatrix:
    """N x m demand of one round; column i is agent i's demand vector."""
    entries: np.ndarray

    def __post_init__(self):
        x = np.array(self.entries, dtype=float)
        if x.ndim != 2:
            raise DimensionError(f"demand must be an N x m matrix, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise DataError("demand contains non-finite entries")
        if x.size and x.min() < 0:
            raise DataError("demand entries must be nonnegative")
        tol = get_settings().FEASIBILITY_TOL
        norms = x.sum(axis=0)
        if np.any(norms > 1.0 + tol):
            i = int(np.argmax(norms))
            raise DataError(f"agent {i + 1} demand has l1-norm {norms[i]!r} > 1")
        object.__setattr__(self, "entries", _frozen(x))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.entries.shape

    def __eq__(self, other) -> bool:
        if not isinstance(other, DemandMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)


@dataclass(frozen=True, eq=False)
class DemandTrace:
    """
    A horizon of demand matrices over a fixed N x m shape.

    Stored either as one-hot file ids (T x m, 0-based) or densely (T x N x m).
    Rounds are indexed from 0; values are not checked against the demand
    bounds here, validate_trace reports those.
    """
    N: int
    m: int
    family: Literal["cache", "sched", "match"]
    one_hot: Optional[np.ndarray] = None
    dense: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.N < 1 or self.m < 1:
            raise DimensionError(f"trace needs N >= 1 and m >= 1, got N={self.N}, m={self.m}")
        if (self.one_hot is None) == (self.dense is None):
            raise DataError("trace needs exactly one of one_hot or dense storage")
        if self.one_hot is not None:
            ids = np.array(self.one_hot, dtype=np.int64)
            if ids.ndim != 2 or ids.shape[1] != self.m:
                raise DimensionError(f"one-hot trace must be T x {self.m}, got shape {ids.shape}")
            if ids.size and (ids.min() < 0 or ids.max() >= self.N):
                raise DataError(f"file ids must lie in [0, {self.N})")
            object.__setattr__(self, "one_hot", _frozen(ids))
            T = ids.shape[0]
        else:
            X = np.array(self.dense, dtype=float)
            if X.ndim != 3 or X.shape[1:] != (self.N, self.m):
                raise DimensionError(f"dense trace must be T x {self.N} x {self.m}, got shape {X.shape}")
            if not np.all(np.isfinite(X)):
                raise DataError("trace contains non-finite demand")
            object.__setattr__(self, "dense", _frozen(X))
            T = X.shape[0]
        if T < 1:
            raise DataError("trace needs at least one round")

    @property
    def horizon(self) -> int:
        return (self.one_hot if self.one_hot is not None else self.dense).shape[0]

    @property
    def is_one_hot(self) -> bool:
        return self.one_hot is not None

    def round_array(self, t: int) -> np.ndarray:
        """Dense N x m demand of round t, unchecked."""
        if self.one_hot is not None:
            x = np.zeros((self.N, self.m))
            x[self.one_hot[t], np.arange(self.m)] = 1.0
            return x
        return np.array(self.dense[t])

    def round(self, t: int) -> DemandMatrix:
        return DemandMatrix(self.round_array(t))

    @property
    def rounds(self) -> Iterator[DemandMatrix]:
        for t in range(self.horizon):
            yield self.round(t)

    def prefix(self, T: int) -> "DemandTrace":
        if not 1 <= T <= self.horizon:
            raise DataError(f"prefix length {T} outside [1, {self.horizon}]")
        if self.one_hot is not None:
            return DemandTrace(self.N, self.m, self.family, one_hot=self.one_hot[:T])
        return DemandTrace(self.N, self.m, self.family, dense=self.dense[:T])

    def cumulative_demand(self) -> np.ndarray:
        """Sum of the demand matrices over all rounds (N x m)."""
        if self.one_hot is not None:
            C = np.zeros((self.N, self.m))
            cols = np.broadcast_to(np.arange(self.m), self.one_hot.shape)
            np.add.at(C, (self.one_hot, cols), 1.0)
            return C
        return self.dense.sum(axis=0)

    def column_norms(self) -> np.ndarray:
        """T x m matrix of per-agent demand l1-norms."""
        if self.one_hot is not None:
            return np.ones(self.one_hot.shape)
        return self.dense.sum(axis=1)

    def column_minima(self) -> np.ndarray:
        """T x m matrix of the smallest entry of each agent's demand."""
        if self.one_hot is not None:
            return np.zeros(self.one_hot.shape) if self.N > 1 else np.ones(self.one_hot.shape)
        return self.dense.min(axis=1)

    def to_dense(self) -> np.ndarray:
        if self.dense is not None:
            return np.array(self.dense)
        X = np.zeros((self.horizon, self.N, self.m))
        t = np.arange(self.horizon)[:, None]
        X[t, self.one_hot, np.arange(self.m)[None, :]] = 1.0
        return X

    def __eq__(self, other) -> bool:
        if not isinstance(other, DemandTrace):
            return NotImplemented
        if (self.N, self.m, self.family, self.horizon) != (other.N, other.m, other.family, other.horizon):
            return False
        if self.one_hot is not None and other.one_hot is not None:
            return np.array_equal(self.one_hot, other.one_hot)
        return np.array_equal(self.to_dense(), other.to_dense())


@dataclass(frozen=True, eq=False)
class AllocationMatrix:
    """N x m allocation; column i is agent i's share, checked against its family."""
    entries: np.ndarray
    family: Optional[object] = None

    def __post_init__(self):
        y = np.array(self.entries, dtype=float)
        if y.ndim != 2:
            raise DimensionError(f"allocation must be an N x m matrix, got shape {y.shape}")
        if not np.all(np.isfinite(y)):
            raise DataError("allocation contains non-finite entries")
        if self.family is not None:
            self._check_membership(y)
        object.__setattr__(self, "entries", _frozen(y))

    def _check_membership(self, y: np.ndarray) -> None:
        family = self.family
        if y.shape != (family.n_resources, family.n_agents):
            raise DimensionError(
                f"{family.kind} allocation must be {family.n_resources} x {family.n_agents}, got {y.shape}"
            )
        tol = get_settings().FEASIBILITY_TOL
        if family.kind == "cache":
            if np.any(np.abs(y - y[:, :1]) > tol):
                raise DataError("shared-cache allocation columns must be identical")
            decision = y[:, 0]
        elif family.kind == "sched":
            decision = y[0]
        else:
            decision = y
        if not family.contains(decision, tol):
            raise DataError(f"allocation is not in the {family.kind} family")

    @classmethod
    def from_decision(cls, family, decision: np.ndarray) -> "AllocationMatrix":
        return cls(family.to_allocation(decision), family)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.entries.shape

    def __eq__(self, other) -> bool:
        if not isinstance(other, AllocationMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)


@dataclass(frozen=True, eq=False)
class RewardState:
    """Cumulative per-agent rewards, starting from one, after t rounds."""
    R: np.ndarray
    t: int = 0

    def __post_init__(self):
        R = np.array(self.R, dtype=float)
        if R.ndim != 1:
            raise DimensionError(f"rewards must be a vector, got shape {R.shape}")
        if not np.all(np.isfinite(R)) or (R.size and R.min() < 1.0):
            raise DataError("cumulative rewards must be finite and at least 1")
        object.__setattr__(self, "R", _frozen(R))

    def __eq__(self, other) -> bool:
        if not isinstance(other, RewardState):
            return NotImplemented
        return self.t == other.t and np.array_equal(self.R, other.R)


class TraceViolation(BaseModel):
    """One demand column outside the allowed bounds, or a shape problem."""
    model_config = ConfigDict(frozen=True)

    round: int = Field(ge=0, description="1-indexed round; 0 for trace-level problems")
    agent: int = Field(ge=0, description="1-indexed agent; 0 for trace-level problems")
    kind: Literal["below_delta", "above_one", "negative", "dimension"]
    value: float
