"""
Gaussian likelihood, maximum-likelihood fitting and the likelihood-ratio
test for the imaginary part of sigma_12.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg, optimize, stats

from src.mvmatern.config import settings
from src.mvmatern.errors import (
    ConvergenceError,
    DatasetError,
    FactorizationError,
    FitError,
    ModelValidationError,
)
from src.mvmatern.models.config_dto import FFTGrid
from src.mvmatern.models.dataset import Dataset
from src.mvmatern.models.fit_dto import FitConfig, FitResult, LRTResult, StartDiagnostics
from src.mvmatern.models.model_spec import ModelSpec
from src.mvmatern.models.process import CrossSigma, matrix_to_tuple
from src.mvmatern.numerics.covariance import CovFunction, cov_matrix, dataset_extent
from src.mvmatern.numerics.fft_backend import default_grid, grid_diagnostics
from src.mvmatern.numerics.linalg import chol_logdet, stable_cholesky
from src.mvmatern.numerics.spectral import validate_model, validated
from src.mvmatern.stats.params import ParamVector

logger = logging.getLogger(__name__)

PENALTY = 1e10
LOG_2PI = float(np.log(2.0 * np.pi))


def aic(loglik: float, n_params: int) -> float:
    return 2.0 * n_params - 2.0 * loglik


def check_dataset_against_model(model: ModelSpec, dataset: Dataset) -> None:
    """Raise DatasetError when records cannot be modelled by ``model``."""
    if dataset.n == 0:
        raise DatasetError("dataset is empty")
    if dataset.d != model.dim:
        raise DatasetError(f"dataset has d={dataset.d} coordinates, model has d={model.dim}")
    if dataset.p > model.p:
        raise DatasetError(f"dataset has {dataset.p} variables, model has p={model.p}")
    for first, second in dataset.duplicate_pairs():
        j = int(dataset.var[first])
        if model.processes[j].nugget <= 0:
            raise DatasetError(
                f"records {first + 1} and {second + 1} share location and variable {j + 1} with zero nugget",
                line=second + 2)


def _observations(dataset: Dataset, mean_handling: str) -> np.ndarray:
    if mean_handling == "zero":
        return np.asarray(dataset.value, dtype=float)
    centered, _ = dataset.centered()
    return centered


def loglik_detail(model: ModelSpec, dataset: Dataset, mean_handling: str = "empirical",
                  cov_fn: Optional[CovFunction] = None) -> Tuple[float, List[str]]:
    """(log-likelihood, violations); -inf with the violation list outside the valid region."""
    violations = validate_model(model)
    if violations:
        return -np.inf, violations
    if dataset.n == 0:
        raise DatasetError("dataset is empty")
    z = _observations(dataset, mean_handling)
    gamma = cov_matrix(model, dataset, cov_fn)
    factor, _ = stable_cholesky(gamma, context=f"likelihood covariance of {model.variant.value}")
    alpha = linalg.solve_triangular(factor, z, lower=True, check_finite=False)
    value = -0.5 * (dataset.n * LOG_2PI + chol_logdet(factor) + float(alpha @ alpha))
    return value, []


def loglik(model: ModelSpec, dataset: Dataset, mean_handling: str = "empirical",
           cov_fn: Optional[CovFunction] = None) -> float:
    """
    -1/2 [n log 2 pi + log det Gamma + z' Gamma^{-1} z].

    Args:
        model: Model whose joint covariance Gamma is assembled.
        dataset: Observations; z is their value vector after mean handling.
        mean_handling: ``empirical`` subtracts per-variable means, ``zero`` keeps values.
        cov_fn: Optional prebuilt covariance function (e.g. on a frozen grid).

    Returns:
        The log-likelihood, or -inf when the model violates its invariants.
    """
    value, violations = loglik_detail(model, dataset, mean_handling, cov_fn)
    if violations:
        logger.debug("loglik outside the valid region: %s", "; ".join(violations))
    return value


def _frozen_grid(initial: ModelSpec, dataset: Dataset, config: FitConfig) -> Optional[FFTGrid]:
    if config.backend == "closed":
        return None
    grid = config.grid or default_grid(initial, dataset_extent(dataset))
    for note in grid_diagnostics(initial, grid):
        logger.warning("fit grid: %s", note)
    return grid


class _Objective:
    """Negative log-likelihood on the transformed scale, with a flat penalty outside the valid region."""

    def __init__(self, pv: ParamVector, dataset: Dataset, config: FitConfig, grid: Optional[FFTGrid]):
        self.pv = pv
        self.dataset = dataset
        self.config = config
        self.grid = grid

    def __call__(self, theta: np.ndarray) -> float:
        try:
            model = self.pv.decode(theta)
            if validate_model(model):
                return PENALTY
            cov_fn = CovFunction(model, backend=self.config.backend, grid=self.grid)
            value, _ = loglik_detail(model, self.dataset, self.config.mean_handling, cov_fn)
        except (FactorizationError, ConvergenceError, ModelValidationError, FloatingPointError) as exc:
            logger.debug("objective penalized: %s", exc)
            return PENALTY
        if not np.isfinite(value):
            return PENALTY
        return -value


def _starts(pv: ParamVector, initial: ModelSpec, config: FitConfig, extra: Optional[List[ModelSpec]]) -> List[np.ndarray]:
    base = pv.clip(pv.encode(initial))
    starts = [base] + [pv.clip(pv.encode(model)) for model in extra or []]
    rng = np.random.default_rng(config.seed)
    while len(starts) < config.n_starts:
        starts.append(pv.clip(base + rng.normal(0.0, 0.5, size=base.size)))
    return starts


def _condition_number(result: optimize.OptimizeResult) -> Optional[float]:
    hess_inv = getattr(result, "hess_inv", None)
    if hess_inv is None:
        return None
    try:
        dense = hess_inv.todense() if hasattr(hess_inv, "todense") else np.asarray(hess_inv)
        return float(np.linalg.cond(dense))
    except (ValueError, np.linalg.LinAlgError):
        return None


def fit(initial: ModelSpec, dataset: Dataset, config: Optional[FitConfig] = None,
        extra_starts: Optional[List[ModelSpec]] = None, max_workers: Optional[int] = None) -> FitResult:
    """
    Maximum likelihood by L-BFGS-B with central-difference gradients.

    The first start is ``initial``; ``extra_starts`` follow, then random
    perturbations up to ``config.n_starts``. The FFT grid, when one is
    needed, is fixed from the initial model for the whole fit.
    """
    config = config or FitConfig()
    initial = validated(initial, "fit initial model")
    check_dataset_against_model(initial, dataset)
    pv = ParamVector(initial, config, length_scale=max(dataset_extent(dataset), 1e-12))
    objective = _Objective(pv, dataset, config, _frozen_grid(initial, dataset, config))
    starts = _starts(pv, initial, config, extra_starts)
    logger.info("fitting %d parameters (%s) from %d starts", pv.n_params, ", ".join(pv.names), len(starts))

    def run(start: np.ndarray) -> optimize.OptimizeResult:
        return optimize.minimize(objective, start, method="L-BFGS-B", jac="3-point", bounds=pv.bounds(),
                                 options={"maxiter": config.max_iter, "finite_diff_rel_step": config.gradient_step})

    with ThreadPoolExecutor(max_workers=max_workers or settings.THREADS) as pool:
        results = list(pool.map(run, starts))

    diagnostics = [
        StartDiagnostics(start=i, loglik=float(-res.fun) if res.fun < PENALTY else -np.inf,
                         converged=bool(res.success), iterations=int(res.nit), message=str(res.message))
        for i, res in enumerate(results)
    ]
    usable = [res for res in results if np.isfinite(res.fun) and res.fun < PENALTY]
    if not usable:
        raise FitError("every start failed to reach a finite likelihood", diagnostics)
    best = min(usable, key=lambda res: res.fun)
    estimates = pv.decode(best.x)
    value = float(-best.fun)
    backend = CovFunction(estimates, backend=config.backend, grid=objective.grid).backend_used
    if not best.success:
        logger.warning("best start did not report convergence: %s", best.message)
    return FitResult(
        estimates=estimates,
        loglik=value,
        aic=aic(value, pv.n_params),
        n_params=pv.n_params,
        converged=bool(best.success),
        iterations=int(best.nit),
        backend_used=backend,
        condition_number=_condition_number(best),
        starts=diagnostics,
    )


def _real_part_only(model: ModelSpec) -> ModelSpec:
    zeros = matrix_to_tuple(np.zeros((model.p, model.p)))
    return model.with_cross(CrossSigma(re=model.cross.re, im=zeros))


def lrt_imag(dataset: Dataset, initial: ModelSpec, config: Optional[FitConfig] = None,
             max_workers: Optional[int] = None) -> LRTResult:
    """
    lambda = 2 (l1 - l0) for Im(sigma_12) free versus fixed at 0.

    The free fit starts from the constrained optimum, so lambda < 0 only
    through optimizer noise; it is clamped to 0 after a warning.
    """
    if initial.p != 2:
        raise FitError(f"the imaginary-part test needs a bivariate model (got p={initial.p})")
    config = config or FitConfig()
    try:
        fit0 = fit(_real_part_only(initial), dataset, config.model_copy(update={"estimate_im": False}),
                   max_workers=max_workers)
    except FitError as exc:
        raise FitError(f"constrained fit failed: {exc}", exc.diagnostics) from exc
    try:
        fit1 = fit(fit0.estimates, dataset, config.model_copy(update={"estimate_im": True, "fix_im_axis": True}),
                   max_workers=max_workers)
    except FitError as exc:
        raise FitError(f"unconstrained fit failed: {exc}", exc.diagnostics) from exc

    lam = 2.0 * (fit1.loglik - fit0.loglik)
    if lam < -1e-6:
        logger.warning("free fit scored below the constrained fit (lambda=%.3e); clamping to 0", lam)
    lam = max(lam, 0.0)
    df = fit1.n_params - fit0.n_params
    return LRTResult(**{"lambda": lam, "p_value": float(stats.chi2.sf(lam, df)), "df": df, "fit0": fit0, "fit1": fit1})
