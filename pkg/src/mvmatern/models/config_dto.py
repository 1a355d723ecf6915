import math
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.mvmatern.config import settings


class SpecFunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    series_tol: float = Field(default_factory=lambda: settings.SERIES_TOL, gt=0)
    max_terms: int = Field(default_factory=lambda: settings.MAX_SERIES_TERMS, ge=1)
    asymptotic_switch: float = Field(default_factory=lambda: settings.ASYMPTOTIC_SWITCH, gt=0)


class QuadratureConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    abs_tol: float = Field(default_factory=lambda: settings.QUAD_ABS_TOL, gt=0)
    rel_tol: float = Field(default_factory=lambda: settings.QUAD_REL_TOL, gt=0)
    max_subdivisions: int = Field(default_factory=lambda: settings.QUAD_LIMIT, ge=1)
    truncation_radius: Optional[float] = Field(default=None, gt=0, description="X; derived from the model when omitted")


class FFTGrid(BaseModel):
    """Regular lag grid on [-L, L)^d with N points per axis."""
    model_config = ConfigDict(frozen=True)

    half_width: float = Field(gt=0, description="L")
    points_per_axis: int = Field(description="N, a power of two")
    interpolation: Literal["linear", "bilinear"] = "linear"
    singularity_subtraction: bool = True

    @field_validator("points_per_axis")
    @classmethod
    def _power_of_two(cls, n: int) -> int:
        if n < 2 or n & (n - 1):
            raise ValueError("points_per_axis must be a power of two")
        return n

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def frequency_spacing(self) -> float:
        return math.pi / self.half_width
