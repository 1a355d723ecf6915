"""
Monte-Carlo simulation designs: likelihood-ratio calibration and power,
estimation of sigma_12 and prediction from the other variable.

Every replicate simulates a bivariate field at uniform random points, fits
the real (Im sigma_12 = 0) and complex models, and records one row. Failed
replicates keep a row with ``status = failed`` and the error code.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from src.mvmatern.config import settings
from src.mvmatern.errors import MaternError
from src.mvmatern.models.fit_dto import FitConfig
from src.mvmatern.models.model_spec import ModelSpec
from src.mvmatern.models.process import DirectionalGeometry, ProcessParams, unit
from src.mvmatern.models.request_dto import PredictionRequest, SimRequest, SimStudyConfig
from src.mvmatern.stats.inference import lrt_imag
from src.mvmatern.stats.predict import cokrige
from src.mvmatern.stats.simulate import as_dataset, simulate_exact

logger = logging.getLogger(__name__)

SIGMA12 = {"real": 0.4 + 0.0j, "imag": 0.4j, "complex": 0.4 + 0.4j}
AXES = {"e1": (1.0, 0.0), "diag": (1.0, 1.0)}


def truth_model(cfg: SimStudyConfig) -> ModelSpec:
    """Data-generating model of a design."""
    sigma12 = SIGMA12[cfg.truth]
    if cfg.design == "lrt-d2":
        axis = unit(list(AXES[cfg.axis]))
        processes = [ProcessParams(nu=0.75, a=10.0, sigma=1.0), ProcessParams(nu=0.75, a=10.0, sigma=1.0)]
        return ModelSpec.build("SMM", processes, {(0, 1): sigma12}, dim=2,
                               geometry=DirectionalGeometry(theta_star_im=axis, theta_star_phi=axis))
    processes = [ProcessParams(nu=0.5, a=8.0, sigma=1.0), ProcessParams(nu=0.75, a=12.0, sigma=1.0)]
    return ModelSpec.build("SMM", processes, {(0, 1): sigma12}, dim=1)


def fit_config(cfg: SimStudyConfig) -> FitConfig:
    d2 = cfg.design == "lrt-d2"
    return FitConfig(mean_handling="zero", n_starts=cfg.n_starts, seed=cfg.seed,
                     backend="auto" if d2 else "fft", estimate_axes=cfg.estimate_axes and d2)


def _initial(truth: ModelSpec) -> ModelSpec:
    """Fits start from the truth; d=2 fits assume theta* = e1 unless the axis is estimated."""
    model = truth
    if truth.dim == 2:
        model = model.with_geometry(DirectionalGeometry.default(2))
    return model


def _prediction_rmse(estimates: ModelSpec, dataset, test_points: np.ndarray, test_values: np.ndarray) -> Dict[int, float]:
    """RMSE of each variable predicted only from the other variable."""
    out = {}
    n_test = test_points.shape[0]
    for t in range(estimates.p):
        targets = tuple((tuple(map(float, pt)), t) for pt in test_points)
        req = PredictionRequest(model=estimates, observed=dataset, targets=targets, mode="other", mean_handling="zero")
        pred = cokrige(req).mean
        truth = test_values[t * n_test:(t + 1) * n_test]
        out[t] = float(np.sqrt(np.mean((pred - truth) ** 2)))
    return out


def run_replicate(cfg: SimStudyConfig, replicate: int, seed_seq: np.random.SeedSequence) -> dict:
    row = {"replicate": replicate, "status": "ok", "error": ""}
    truth = truth_model(cfg)
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    n_test = cfg.n_test if cfg.design == "pred-d1" else 0
    points = rng.uniform(size=(cfg.n + n_test, truth.dim))
    try:
        # 1. Simulate
        req = SimRequest.on_points(truth, points, seed=int(rng.integers(2 ** 63)))
        field = simulate_exact(req, max_workers=1)[0].reshape(truth.p, -1)
        train = field[:, :cfg.n].reshape(-1)
        dataset = as_dataset(truth, points[:cfg.n], train)

        # 2. Fit real and complex models
        lrt = lrt_imag(dataset, _initial(truth), fit_config(cfg), max_workers=1)
        real, cplx = lrt.fit0.estimates.sigma(0, 1), lrt.fit1.estimates.sigma(0, 1)
        row.update({
            "lambda": lrt.lambda_, "p_value": lrt.p_value, "reject": lrt.p_value < cfg.level,
            "real.re_sigma12": real.real,
            "complex.re_sigma12": cplx.real, "complex.im_sigma12": cplx.imag,
            "real.loglik": lrt.fit0.loglik, "complex.loglik": lrt.fit1.loglik,
        })

        # 3. Predict held-out points
        if n_test:
            test_values = field[:, cfg.n:].reshape(-1)
            for name, est in (("real", lrt.fit0.estimates), ("complex", lrt.fit1.estimates)):
                for t, value in _prediction_rmse(est, dataset, points[cfg.n:], test_values).items():
                    row[f"{name}.rmse.{t + 1}"] = value
    except MaternError as exc:
        logger.warning("replicate %d failed [%s]: %s", replicate, exc.code, exc)
        row.update({"status": "failed", "error": f"{exc.code}: {exc}"})
    return row


def summarize(cfg: SimStudyConfig, frame: pd.DataFrame) -> dict:
    ok = frame[frame["status"] == "ok"] if "status" in frame else frame
    summary = {"design": cfg.design, "truth": cfg.truth, "reps": int(len(frame)),
               "failed": int(len(frame) - len(ok))}
    if len(ok) == 0:
        return summary
    p_values = ok["p_value"].to_numpy(dtype=float)
    summary["rejection_rate"] = float(np.mean(p_values < cfg.level))
    if len(p_values) > 1:
        summary["ks_uniform_p_value"] = float(stats.kstest(p_values, "uniform").pvalue)
    for col in ("real.re_sigma12", "complex.re_sigma12", "complex.im_sigma12"):
        values = ok[col].to_numpy(dtype=float)
        summary[f"{col}.mean"] = float(np.mean(values))
        summary[f"{col}.sd"] = float(np.std(values, ddof=1)) if len(values) > 1 else float("nan")
    for col in [c for c in ok.columns if ".rmse." in c]:
        summary[f"{col}.mean"] = float(ok[col].mean())
    return summary


def run_sim_study(cfg: SimStudyConfig) -> Tuple[pd.DataFrame, dict]:
    """Per-replicate rows and the aggregate summary; replicate streams are independent of thread count."""
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.reps)
    logger.info("simulation design %s: truth=%s reps=%d n=%d", cfg.design, cfg.truth, cfg.reps, cfg.n)
    with ThreadPoolExecutor(max_workers=cfg.threads or settings.THREADS) as pool:
        rows: List[dict] = list(pool.map(lambda args: run_replicate(cfg, *args), enumerate(children)))
    frame = pd.DataFrame(rows)
    return frame, summarize(cfg, frame)
