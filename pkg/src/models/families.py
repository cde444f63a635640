"""
Feasible allocation families.

Each family fixes the decision variable the policy moves in and maps it to the
N x m allocation matrix whose column i is agent i's allocation.
"""
from typing import Annotated, Literal, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.utils.errors import DataError, DimensionError


class _Family(BaseModel):
    model_config = ConfigDict(frozen=True)

    def _check_shape(self, decision: np.ndarray) -> np.ndarray:
        decision = np.asarray(decision, dtype=float)
        if decision.shape != self.decision_shape:
            raise DimensionError(
                f"{self.kind} decision must have shape {self.decision_shape}, got {decision.shape}"
            )
        return decision


class SharedCappedSimplex(_Family):
    """Shared cache of capacity k over a library of N files, m users."""
    kind: Literal["cache"] = "cache"
    N: int = Field(ge=1, description="Library size")
    k: int = Field(ge=1, description="Cache capacity")
    m: int = Field(ge=1, description="Number of users")

    @model_validator(mode="after")
    def _capacity_within_library(self) -> "SharedCappedSimplex":
        if self.k > self.N:
            raise ValueError(f"cache capacity k={self.k} exceeds library size N={self.N}")
        return self

    @property
    def n_resources(self) -> int:
        return self.N

    @property
    def n_agents(self) -> int:
        return self.m

    @property
    def decision_shape(self) -> Tuple[int, ...]:
        return (self.N,)

    @property
    def mu(self) -> float:
        return self.k / self.N

    def uniform_point(self) -> np.ndarray:
        return np.full(self.N, self.mu)

    def to_allocation(self, decision: np.ndarray) -> np.ndarray:
        y = self._check_shape(decision)
        return np.repeat(y[:, None], self.m, axis=1)

    def decision_gradient(self, G: np.ndarray) -> np.ndarray:
        # every user sees the same cache, so the per-user gradients add up
        return np.asarray(G, dtype=float).sum(axis=1)

    def contains(self, decision: np.ndarray, tol: float) -> bool:
        y = np.asarray(decision, dtype=float)
        if y.shape != self.decision_shape or not np.all(np.isfinite(y)):
            return False
        return bool(y.min() >= -tol and y.max() <= 1.0 + tol and abs(y.sum() - self.k) <= tol)


class JobSimplex(_Family):
    """A single job per round routed across m machines."""
    kind: Literal["sched"] = "sched"
    m: int = Field(ge=1, description="Number of machines")

    @property
    def n_resources(self) -> int:
        return 1

    @property
    def n_agents(self) -> int:
        return self.m

    @property
    def decision_shape(self) -> Tuple[int, ...]:
        return (self.m,)

    @property
    def mu(self) -> float:
        return 1.0 / self.m

    def uniform_point(self) -> np.ndarray:
        return np.full(self.m, self.mu)

    def to_allocation(self, decision: np.ndarray) -> np.ndarray:
        return self._check_shape(decision)[None, :].copy()

    def decision_gradient(self, G: np.ndarray) -> np.ndarray:
        return np.asarray(G, dtype=float)[0].copy()

    def contains(self, decision: np.ndarray, tol: float) -> bool:
        y = np.asarray(decision, dtype=float)
        if y.shape != self.decision_shape or not np.all(np.isfinite(y)):
            return False
        return bool(y.min() >= -tol and abs(y.sum() - 1.0) <= tol)


class BirkhoffPolytope(_Family):
    """Fractional perfect matchings of m resources to m agents."""
    kind: Literal["match"] = "match"
    m: int = Field(ge=1, description="Side of the doubly stochastic matrix")

    @property
    def n_resources(self) -> int:
        return self.m

    @property
    def n_agents(self) -> int:
        return self.m

    @property
    def decision_shape(self) -> Tuple[int, ...]:
        return (self.m, self.m)

    @property
    def mu(self) -> float:
        return 1.0 / self.m

    def uniform_point(self) -> np.ndarray:
        return np.full((self.m, self.m), self.mu)

    def to_allocation(self, decision: np.ndarray) -> np.ndarray:
        return self._check_shape(decision).copy()

    def decision_gradient(self, G: np.ndarray) -> np.ndarray:
        return np.asarray(G, dtype=float).copy()

    def contains(self, decision: np.ndarray, tol: float) -> bool:
        Y = np.asarray(decision, dtype=float)
        if Y.shape != self.decision_shape or not np.all(np.isfinite(Y)):
            return False
        return bool(
            Y.min() >= -tol
            and Y.max() <= 1.0 + tol
            and np.all(np.abs(Y.sum(axis=0) - 1.0) <= tol)
            and np.all(np.abs(Y.sum(axis=1) - 1.0) <= tol)
        )


FeasibleFamily = Annotated[
    Union[SharedCappedSimplex, JobSimplex, BirkhoffPolytope],
    Field(discriminator="kind"),
]

FAMILY_KINDS = ("cache", "sched", "match")


def make_family(kind: str, N: int = 0, k: int = 1, m: int = 1) -> Union[SharedCappedSimplex, JobSimplex, BirkhoffPolytope]:
    """
    Build a family from command-line style parameters.

    Args:
        kind: One of "cache", "sched", "match"
        N: Library size (cache only)
        k: Cache capacity (cache only)
        m: Number of agents

    Returns:
        The family model

    Raises:
        DataError: If the kind is unknown or the parameters are invalid
    """
    try:
        if kind == "cache":
            return SharedCappedSimplex(N=N, k=k, m=m)
        if kind == "sched":
            return JobSimplex(m=m)
        if kind == "match":
            return BirkhoffPolytope(m=m)
    except ValidationError as e:
        raise DataError(f"invalid {kind} family: {e.errors()[0]['msg']}") from e
    raise DataError(f"unknown family {kind!r}; expected one of {', '.join(FAMILY_KINDS)}")
