"""
Experiment configuration and result rows.
"""
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.models.families import FeasibleFamily


class TraceSpec(BaseModel):
    """Which demand trace to build and with what parameters."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["lower_bound", "zipf_cache", "iid_uniform", "file"]
    T: Optional[int] = Field(default=None, ge=1)
    eta: Optional[float] = Field(default=None, ge=0.0, le=0.5)
    instance: Optional[Literal[1, 2]] = None
    s: float = Field(default=0.0, ge=0.0, description="Zipf exponent")
    delta: float = Field(default=1.0, gt=0.0, le=1.0, description="Smallest demand l1-norm for iid_uniform")
    seed: int = 0
    path: Optional[str] = None

    @model_validator(mode="after")
    def _parameters_for_kind(self) -> "TraceSpec":
        if self.kind == "file":
            if not self.path:
                raise ValueError("file traces need a path")
            return self
        if self.T is None:
            raise ValueError(f"{self.kind} traces need a horizon T")
        if self.kind == "lower_bound" and (self.eta is None or self.instance is None):
            raise ValueError("lower_bound traces need eta and instance")
        return self


class ExperimentConfig(BaseModel):
    """A grid of (alpha, seed) cells evaluated at ascending checkpoints."""
    trace: TraceSpec
    family: FeasibleFamily
    alphas: List[float] = Field(min_length=1)
    horizons: List[int] = Field(min_length=1)
    mode: Literal["fractional", "integral"] = "fractional"
    step_scale: Optional[float] = Field(default=None, gt=0.0)
    seeds: List[int] = Field(default_factory=lambda: [0], min_length=1)
    weights: Optional[Tuple[float, ...]] = None
    out: Optional[str] = None

    @field_validator("alphas")
    @classmethod
    def _alphas_in_range(cls, v: List[float]) -> List[float]:
        if any(not 0.0 <= a < 1.0 for a in v):
            raise ValueError("every alpha must lie in [0, 1)")
        return v

    @field_validator("horizons")
    @classmethod
    def _horizons_ascending(cls, v: List[int]) -> List[int]:
        if any(h < 1 for h in v) or any(a >= b for a, b in zip(v, v[1:])):
            raise ValueError("horizons must be positive and strictly ascending")
        return v


class MetricsRow(BaseModel):
    """Online and offline performance of one (T, alpha, seed) cell."""
    T: int
    alpha: float
    seed: int
    mode: Literal["fractional", "integral"]
    fairness_online: float
    fairness_offline: float
    c_alpha_regret: float
    surrogate_regret: float
    min_rate: float
    max_rate: float
    R: List[float]
    fairness_online_raw: float
    c_alpha_regret_raw: float
    # integral mode only
    fairness_realized: Optional[float] = None
    max_realized_gap: Optional[float] = None
    hoeffding_radius: Optional[float] = None


class OfflineRow(BaseModel):
    """Offline optimum of one trace prefix next to the uniform-allocation floor."""
    T: int
    alpha: float
    seed: int
    fairness_offline: float
    fw_gap: float
    iterations: int
    fairness_uniform: float
    floor: float = Field(description="sum_i w_i phi(mu * delta * T)")


class PhaseRow(BaseModel):
    """Fitted surrogate-regret growth exponent for one alpha."""
    alpha: float
    slope: float
    expected_slope: float
    regime: Literal["T^(1/2-alpha)", "sqrt(log T)", "O(1)"]
    final_rate: float = Field(description="min_i R_i(T)/T at the longest horizon")


class BoundPoint(BaseModel):
    """Lower bound and c_alpha upper bound on the approximation factor."""
    alpha: float
    lb_ratio: float
    eta_star: float
    c_alpha: float
    gap: float


class SampleAuditRow(BaseModel):
    """Empirical inclusion frequency of one coordinate against its target."""
    family: Literal["cache", "sched", "match"]
    trial: int
    index: int
    target: float
    empirical: float
    radius: float
    ok: bool


class ProjectionAuditRow(BaseModel):
    """Variational-inequality residual and grid-oracle gap of one projection."""
    family: Literal["cache", "sched", "match"]
    trial: int
    vi_residual: float
    oracle_gap: Optional[float] = None
    ok: bool
