from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.mvmatern.config import settings
from src.mvmatern.models.dataset import Dataset
from src.mvmatern.models.model_spec import ModelSpec


class SimRequest(BaseModel):
    model_config = ConfigDict(frozen=True)

    model: ModelSpec
    locations: Tuple[Tuple[float, ...], ...]
    n_replicates: int = Field(default=1, ge=1)
    seed: int = 0
    method: Literal["exact", "spectral"] = "exact"
    n_frequencies: int = Field(default_factory=lambda: settings.SPECTRAL_FREQUENCIES, ge=1)
    include_nugget: bool = True

    @classmethod
    def on_points(cls, model: ModelSpec, points, **kwargs) -> "SimRequest":
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        return cls(model=model, locations=tuple(tuple(map(float, row)) for row in pts), **kwargs)

    def location_array(self) -> np.ndarray:
        return np.asarray(self.locations, dtype=float).reshape(len(self.locations), -1)


class PredictionRequest(BaseModel):
    """
    mode: ``both`` conditions on every observed variable, ``univariate`` only on
    the target's own variable, ``other`` only on the remaining variables.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    model: ModelSpec
    observed: Dataset
    targets: Tuple[Tuple[Tuple[float, ...], int], ...]
    mode: Literal["both", "univariate", "other"] = "both"
    include_nugget: bool = False
    mean_handling: Literal["empirical", "zero"] = "empirical"
    means: Optional[Tuple[float, ...]] = None

    @classmethod
    def for_points(cls, model: ModelSpec, observed: Dataset, points, variables, **kwargs) -> "PredictionRequest":
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        targets = tuple((tuple(map(float, row)), int(v)) for row, v in zip(pts, np.broadcast_to(variables, len(pts))))
        return cls(model=model, observed=observed, targets=targets, **kwargs)


class PredictionResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    mean: np.ndarray
    variance: np.ndarray


class CVResult(BaseModel):
    """RMSE per (variable, mode); mode 'zero' is the null-prediction baseline."""
    folds: str
    rmse: dict = Field(description="{(variable, mode): rmse}")
    n_folds: int

    def get(self, variable: int, mode: str) -> float:
        return self.rmse[(variable, mode)]


def rows_of(result: CVResult) -> List[dict]:
    return [{"folds": result.folds, "variable": v, "mode": m, "rmse": r} for (v, m), r in sorted(result.rmse.items())]


class SimStudyConfig(BaseModel):
    """One Monte-Carlo design: simulate, fit real and complex models, test and predict."""
    model_config = ConfigDict(frozen=True)

    design: Literal["lrt-d1", "est-d1", "pred-d1", "lrt-d2"]
    reps: int = Field(default=20, ge=1)
    n: int = Field(default=300, ge=2)
    n_test: int = Field(default=100, ge=1)
    seed: int = 0
    truth: Literal["real", "imag", "complex"] = "real"
    axis: Literal["e1", "diag"] = "e1"
    estimate_axes: bool = False
    n_starts: int = Field(default=1, ge=1)
    level: float = Field(default=0.05, gt=0, lt=1)
    threads: Optional[int] = None
