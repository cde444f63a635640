"""
Settings configuration for fairalloc.
"""
import math
from functools import lru_cache
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Numeric knobs and runtime settings."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )

    # App settings
    APP_ENV: str = "development"
    LOG_LEVEL: str = "INFO"

    # Logging
    LOGFIRE_TOKEN: Optional[str] = None

    # Feasible-set geometry
    FEASIBILITY_TOL: float = Field(1e-9, gt=0)
    PROJECTION_TOL: float = Field(1e-12, gt=0)
    DYKSTRA_TOL: float = Field(1e-10, gt=0)
    DYKSTRA_MAX_SWEEPS: int = Field(10_000, ge=1)
    DYKSTRA_MIN_SWEEPS: int = Field(3, ge=1)
    BVN_TOL: float = Field(1e-9, gt=0)

    # OPF policy: step = STEP_SCALE * D / sqrt(S); 1/sqrt(2) gives D/sqrt(2S)
    STEP_SCALE: float = Field(1.0 / math.sqrt(2.0), gt=0)

    # Offline benchmark
    OFFLINE_MAX_ITER: int = Field(20_000, ge=1)
    OFFLINE_REL_TOL: float = Field(1e-6, gt=0)

    # Lower-bound curve
    LB_GRID_STEP: float = Field(1e-5, gt=0, lt=0.5)
    LB_REFINE_TOL: float = Field(1e-9, gt=0)

    # Experiment harness
    MAX_WORKERS: int = Field(1, ge=1)

    @property
    def logfire_enabled(self) -> bool:
        """Check if logs should be shipped through logfire."""
        return bool(self.LOGFIRE_TOKEN)


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


settings = get_settings()
