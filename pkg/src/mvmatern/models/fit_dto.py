from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from src.mvmatern.config import settings
from src.mvmatern.models.config_dto import FFTGrid
from src.mvmatern.models.model_spec import ModelSpec, Variant


class FitConfig(BaseModel):
    """Which parameters are free and how the optimizer runs."""
    model_config = ConfigDict(frozen=True)

    variant: Variant = Variant.SMM
    estimate_im: bool = True
    estimate_nugget: bool = False
    estimate_axes: bool = False
    fix_im_axis: bool = Field(default=False, description="Keep the template's theta_star_im when the axes are free")
    mean_handling: Literal["empirical", "zero"] = "empirical"
    backend: Literal["auto", "closed", "fft"] = "fft"
    grid: Optional[FFTGrid] = None
    n_starts: int = Field(default_factory=lambda: settings.N_STARTS, ge=1)
    max_iter: int = Field(default_factory=lambda: settings.MAX_ITER, ge=1)
    gradient_step: float = Field(default_factory=lambda: settings.GRADIENT_STEP, gt=0)
    nu_bounds: tuple = (0.05, 8.0)
    seed: int = 0


# Model names used in the comparisons, mapped to free-parameter choices.
MODEL_PRESETS: Dict[str, dict] = {
    "IM": {"variant": Variant.IM, "estimate_im": False, "estimate_axes": False},
    "SCF": {"variant": Variant.SCF, "estimate_im": False, "estimate_axes": False},
    "SMM-0": {"variant": Variant.SMM, "estimate_im": False, "estimate_axes": False},
    "SMM-R": {"variant": Variant.SMM, "estimate_im": False, "estimate_axes": True},
    "SMM-C": {"variant": Variant.SMM, "estimate_im": True, "estimate_axes": True},
    "MMG": {"variant": Variant.MMG, "estimate_im": False, "estimate_axes": False},
}


def preset(name: str, **overrides) -> FitConfig:
    if name not in MODEL_PRESETS:
        raise KeyError(f"unknown model preset {name!r}; choose from {sorted(MODEL_PRESETS)}")
    return FitConfig(**{**MODEL_PRESETS[name], **overrides})


class StartDiagnostics(BaseModel):
    start: int
    loglik: float
    converged: bool
    iterations: int
    message: str


class FitResult(BaseModel):
    estimates: ModelSpec
    loglik: float
    aic: float
    n_params: int
    converged: bool
    iterations: int
    backend_used: str
    condition_number: Optional[float] = Field(default=None, description="Condition number of the numerical Hessian at the optimum")
    starts: List[StartDiagnostics] = []


class LRTResult(BaseModel):
    lambda_: float = Field(alias="lambda")
    p_value: float
    df: int
    fit0: FitResult
    fit1: FitResult

    model_config = ConfigDict(populate_by_name=True)
