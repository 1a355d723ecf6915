"""
Cokriging (conditional Gaussian means and variances) and the
cross-validation protocols built on it.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.model_selection import KFold

from src.mvmatern.config import settings
from src.mvmatern.errors import DatasetError
from src.mvmatern.models.dataset import Dataset
from src.mvmatern.models.fit_dto import FitConfig
from src.mvmatern.models.model_spec import ModelSpec
from src.mvmatern.models.request_dto import CVResult, PredictionRequest, PredictionResult
from src.mvmatern.numerics.covariance import CovFunction, cov_matrix
from src.mvmatern.numerics.linalg import chol_solve, stable_cholesky
from src.mvmatern.numerics.spectral import validated
from src.mvmatern.stats.inference import fit

logger = logging.getLogger(__name__)

MODES = ("both", "univariate", "other")


def _used_mask(observed: Dataset, target_var: int, mode: str) -> np.ndarray:
    if mode == "both":
        return np.ones(observed.n, dtype=bool)
    if mode == "univariate":
        return observed.var == target_var
    if mode == "other":
        return observed.var != target_var
    raise ValueError(f"mode must be one of {MODES}")


def _means(req: PredictionRequest, used: Dataset) -> np.ndarray:
    p = req.model.p
    if req.means is not None:
        return np.asarray(req.means, dtype=float)
    if req.mean_handling == "zero":
        return np.zeros(p)
    # variables absent from the conditioning set get mean 0
    return np.array([used.value[used.var == j].mean() if np.any(used.var == j) else 0.0 for j in range(p)])


def _extent(observed: Dataset, targets: np.ndarray) -> float:
    coords = np.vstack([observed.coords, targets]) if observed.n else targets
    return float(np.linalg.norm(np.ptp(coords, axis=0)))


def cokrige(req: PredictionRequest, cov_fn: Optional[CovFunction] = None) -> PredictionResult:
    """
    Conditional mean and variance at every target.

    mean = m_t + Sigma_to Gamma_obs^{-1} (z - m_o),
    var  = C_tt(0) - Sigma_to Gamma_obs^{-1} Sigma_ot (+ nugget_t when include_nugget).
    """
    model = validated(req.model, "cokrige")
    observed = req.observed
    target_coords = np.array([loc for loc, _ in req.targets], dtype=float).reshape(len(req.targets), -1)
    target_vars = np.array([v for _, v in req.targets], dtype=int)
    if target_coords.shape[0] and target_coords.shape[1] != model.dim:
        raise DatasetError(f"targets have {target_coords.shape[1]} coordinates, model has d={model.dim}")
    if np.any((target_vars < 0) | (target_vars >= model.p)):
        raise DatasetError(f"target variable outside [1, {model.p}]")
    if cov_fn is None and target_coords.shape[0]:
        cov_fn = CovFunction(model, max_lag=_extent(observed, target_coords))

    mean = np.empty(target_vars.size)
    variance = np.empty(target_vars.size)
    for t in np.unique(target_vars):
        rows = np.flatnonzero(target_vars == t)
        pp = model.processes[t]
        prior_var = pp.sigma + (pp.nugget if req.include_nugget else 0.0)
        used = observed.subset(np.flatnonzero(_used_mask(observed, int(t), req.mode)))
        means = _means(req, used)
        if used.n == 0:
            mean[rows] = means[t]
            variance[rows] = prior_var
            continue

        # 1. Observation covariance
        gamma = cov_matrix(model, used, cov_fn, include_nugget=True)
        factor, _ = stable_cholesky(gamma, context=f"cokriging covariance for variable {t + 1}")

        # 2. Target/observation covariances, block by observed variable
        cross = np.empty((rows.size, used.n))
        for j in np.unique(used.var):
            cols = np.flatnonzero(used.var == j)
            lags = target_coords[rows][:, None, :] - used.coords[cols][None, :, :]
            cross[:, cols] = np.asarray(cov_fn(int(t), int(j), lags), dtype=float).reshape(rows.size, cols.size)

        # 3. Conditional moments
        resid = used.value - means[used.var]
        mean[rows] = means[t] + cross @ chol_solve(factor, resid)
        reduction = np.einsum("ij,ji->i", cross, chol_solve(factor, cross.T))
        var_t = prior_var - reduction
        tiny = (var_t < 0) & (var_t > -1e-8 * pp.sigma)
        variance[rows] = np.where(tiny, 0.0, var_t)
    return PredictionResult(mean=mean, variance=variance)


def _n_splits(folds: Union[int, str], n: int) -> int:
    if folds in ("n", "loo", "n-fold"):
        return n
    k = int(folds)
    if k < 2:
        raise DatasetError("cross validation needs at least 2 folds")
    if k > n:
        raise DatasetError(f"{k} folds leave an empty fold for a variable with {n} records")
    return k


def _fold_label(folds: Union[int, str]) -> str:
    return "n-fold" if folds in ("n", "loo", "n-fold") else f"{int(folds)}-fold"


def _rmse(errors: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(errors))))


def cross_validate(dataset: Dataset, model: ModelSpec, folds: Union[int, str] = 5, seed: int = 0,
                   modes: Sequence[str] = MODES, fit_config: Optional[FitConfig] = None,
                   include_nugget: bool = False, max_workers: Optional[int] = None) -> CVResult:
    """
    RMSE by (variable, mode) under k-fold or leave-one-out splits of each variable.

    Held-out records of variable t are predicted from the training records
    (``both``), the training records of t only (``univariate``) or every
    record of the other variables (``other``, fold independent). Means are
    training means. With ``fit_config`` the model is refitted on each
    training set starting from ``model``. The ``zero`` mode is the
    null-prediction baseline.
    """
    validated(model, "cross_validate")
    label = _fold_label(folds)
    jobs: List[Tuple[int, np.ndarray, np.ndarray]] = []
    for t in range(model.p):
        idx = dataset.indices(t)
        if idx.size == 0:
            continue
        splitter = KFold(n_splits=_n_splits(folds, idx.size), shuffle=True, random_state=seed)
        for train_pos, test_pos in splitter.split(idx):
            if test_pos.size == 0:
                raise DatasetError(f"empty fold for variable {t + 1}")
            jobs.append((t, idx[test_pos], np.setdiff1d(np.arange(dataset.n), idx[test_pos])))

    def run(job: Tuple[int, np.ndarray, np.ndarray]) -> Dict[str, np.ndarray]:
        t, test, train = job
        training = dataset.subset(train)
        fold_model = model
        if fit_config is not None:
            fold_model = fit(model, training, fit_config, max_workers=1).estimates
        targets = tuple((tuple(map(float, dataset.coords[i])), t) for i in test)
        truth = dataset.value[test]
        errors = {"zero": truth}
        for mode in modes:
            if mode == "other":
                continue
            req = PredictionRequest(model=fold_model, observed=training, targets=targets, mode=mode,
                                    include_nugget=include_nugget)
            errors[mode] = cokrige(req).mean - truth
        return errors

    with ThreadPoolExecutor(max_workers=max_workers or settings.THREADS) as pool:
        fold_errors = list(pool.map(run, jobs))

    collected: Dict[Tuple[int, str], List[np.ndarray]] = {}
    for (t, _, _), errors in zip(jobs, fold_errors):
        for mode, err in errors.items():
            collected.setdefault((t, mode), []).append(err)

    if "other" in modes:
        for t in range(model.p):
            idx = dataset.indices(t)
            if idx.size == 0:
                continue
            targets = tuple((tuple(map(float, dataset.coords[i])), t) for i in idx)
            req = PredictionRequest(model=model, observed=dataset.subset(np.flatnonzero(dataset.var != t)),
                                    targets=targets, mode="other", include_nugget=include_nugget)
            collected[(t, "other")] = [cokrige(req).mean - dataset.value[idx]]

    rmse = {key: _rmse(np.concatenate(parts)) for key, parts in collected.items()}
    n_folds = max((sum(1 for job in jobs if job[0] == t) for t in range(model.p)), default=0)
    logger.info("%s cross validation: %s", label, ", ".join(f"var {t + 1} {m}={v:.4f}" for (t, m), v in sorted(rmse.items())))
    return CVResult(folds=label, rmse=rmse, n_folds=n_folds)


def cokriging_table(results: Dict[str, Tuple[CVResult, CVResult]]) -> pd.DataFrame:
    """
    One row per (model, variable) with columns 5f-both, 5f-univariate,
    nf-both, nf-univariate, other and the zero baseline.
    """
    rows = []
    for name, (five, loo) in results.items():
        variables = sorted({v for v, _ in five.rmse})
        for v in variables:
            rows.append({
                "model": name,
                "variable": v + 1,
                "5f-both": five.rmse.get((v, "both"), np.nan),
                "5f-univariate": five.rmse.get((v, "univariate"), np.nan),
                "nf-both": loo.rmse.get((v, "both"), np.nan),
                "nf-univariate": loo.rmse.get((v, "univariate"), np.nan),
                "other": five.rmse.get((v, "other"), loo.rmse.get((v, "other"), np.nan)),
                "zero": five.rmse.get((v, "zero"), np.nan),
            })
    return pd.DataFrame(rows, columns=["model", "variable", "5f-both", "5f-univariate", "nf-both",
                                       "nf-univariate", "other", "zero"])
