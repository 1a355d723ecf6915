"""
One handler per command. Each takes the parsed argparse namespace, writes its
outputs and returns the process exit status.
"""
import logging
from argparse import Namespace
from typing import List, Optional

import numpy as np
import pandas as pd

from src.mvmatern.errors import DatasetError, ModelConfigError
from src.mvmatern.io.dataset_io import dataset_frame, read_dataset, read_points
from src.mvmatern.io.model_io import read_model, write_model
from src.mvmatern.io.results_io import fit_summary, lrt_summary, write_key_values, write_rows, write_table
from src.mvmatern.models.fit_dto import FitConfig, preset
from src.mvmatern.models.model_spec import ModelSpec
from src.mvmatern.models.request_dto import PredictionRequest, SimRequest, SimStudyConfig
from src.mvmatern.numerics.covariance import CovFunction
from src.mvmatern.stats.inference import fit, lrt_imag
from src.mvmatern.stats.params import adapt_to_variant
from src.mvmatern.stats.predict import cokrige, cokriging_table, cross_validate
from src.mvmatern.stats.simulate import as_dataset, simulate
from src.mvmatern.tasks.benchmark import run_benchmark
from src.mvmatern.tasks.sim_study import run_sim_study
from src.mvmatern.tasks.validation import run_validation

logger = logging.getLogger(__name__)


def parse_lags(text: str, dim: int) -> np.ndarray:
    """
    ``start:stop:num`` (inclusive linspace) or a comma list of values.

    For d = 2 the values form both axes of a square lag grid, returned as
    an (m*m, 2) array.
    """
    text = text.strip()
    try:
        if ":" in text:
            start, stop, num = text.split(":")
            axis = np.linspace(float(start), float(stop), int(num))
        else:
            axis = np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError:
        raise ModelConfigError(f"cannot parse lag spec {text!r}; use start:stop:num or v1,v2,...", key="lags")
    if axis.size == 0:
        raise ModelConfigError("empty lag spec", key="lags")
    if dim == 1:
        return axis
    mesh = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1)
    return mesh.reshape(-1, 2)


def _fit_config(args: Namespace, model: ModelSpec) -> FitConfig:
    overrides = {"backend": args.backend, "seed": args.seed, "mean_handling": args.mean,
                 "estimate_nugget": args.nugget}
    if args.starts is not None:
        overrides["n_starts"] = args.starts
    config = preset(args.preset, **overrides)
    if model.dim == 1 and config.estimate_axes:
        config = config.model_copy(update={"estimate_axes": False})
    return config


def _load(args: Namespace):
    model = read_model(args.model)
    dataset = read_dataset(args.data, d=model.dim, p=model.p)
    return model, dataset


def covgrid(args: Namespace) -> int:
    model = read_model(args.model)
    lags = parse_lags(args.lags, model.dim)
    extent = float(np.max(np.abs(lags))) * (np.sqrt(2.0) if model.dim == 2 else 1.0)
    cov_fn = CovFunction(model, backend=args.backend, max_lag=extent)
    logger.info("covariance backend: %s (%s)", cov_fn.backend_used,
                ", ".join(f"{j + 1}{k + 1}={b}" for (j, k), b in sorted(cov_fn.channel_backends.items())))

    lag_cols = ["h1"] if model.dim == 1 else ["h1", "h2"]
    frames = []
    for j in range(model.p):
        for k in range(model.p):
            frame = pd.DataFrame(lags.reshape(len(lags), -1), columns=lag_cols)
            frame["j"], frame["k"] = j + 1, k + 1
            frame["value"] = np.asarray(cov_fn(j, k, lags), dtype=float)
            frame["backend"] = cov_fn.channel_backends[(min(j, k), max(j, k))]
            frames.append(frame)
    write_table(pd.concat(frames, ignore_index=True), args.out)
    return 0


def simulate_cmd(args: Namespace) -> int:
    model = read_model(args.model)
    points = read_points(args.points, d=model.dim)
    overrides = {"n_replicates": args.replicates, "seed": args.seed, "method": args.method,
                 "include_nugget": not args.no_nugget}
    if args.frequencies is not None:
        overrides["n_frequencies"] = args.frequencies
    req = SimRequest.on_points(model, points, **overrides)
    draws = simulate(req)

    frames = []
    for r, row in enumerate(draws):
        frame = dataset_frame(as_dataset(model, points, row))
        frame.insert(0, "replicate", r + 1)
        frames.append(frame)
    write_table(pd.concat(frames, ignore_index=True), args.out)
    return 0


def fit_cmd(args: Namespace) -> int:
    model, dataset = _load(args)
    config = _fit_config(args, model)
    result = fit(adapt_to_variant(model, config), dataset, config)
    logger.info("loglik %.6f, aic %.6f, %s", result.loglik, result.aic,
                "converged" if result.converged else "not converged")
    write_key_values(fit_summary(result), args.out)
    if args.row_out:
        write_rows([fit_summary(result)], args.row_out)
    if args.out_model:
        write_model(result.estimates, args.out_model)
    return 0


def test_imag(args: Namespace) -> int:
    model, dataset = _load(args)
    config = _fit_config(args, model)
    result = lrt_imag(dataset, adapt_to_variant(model, config), config)
    logger.info("lambda %.6f, df %d, p-value %.6g", result.lambda_, result.df, result.p_value)
    write_key_values(lrt_summary(result), args.out)
    if args.row_out:
        write_rows([lrt_summary(result)], args.row_out)
    return 0


def predict_cmd(args: Namespace) -> int:
    model, dataset = _load(args)
    points = read_points(args.points, d=model.dim)
    if not 1 <= args.var <= model.p:
        raise DatasetError(f"--var must lie in 1..{model.p}")
    req = PredictionRequest.for_points(model, dataset, points, args.var - 1, mode=args.mode,
                                       include_nugget=args.include_nugget, mean_handling=args.mean)
    result = cokrige(req)
    frame = pd.DataFrame(points.reshape(len(points), -1), columns=[f"x{i + 1}" for i in range(model.dim)])
    frame["var"] = args.var
    frame["mean"] = result.mean
    frame["variance"] = result.variance
    write_table(frame, args.out)
    return 0


def cv(args: Namespace) -> int:
    model, dataset = _load(args)
    fit_config = _fit_config(args, model) if args.refit else None
    if fit_config is not None:
        model = adapt_to_variant(model, fit_config)
    label = args.preset if args.refit else model.variant.value
    # the table pairs a 5-fold and a leave-one-out run of the same model
    five, loo = (cross_validate(dataset, model, folds=folds, seed=args.seed, fit_config=fit_config,
                                include_nugget=args.include_nugget) for folds in (5, "n"))
    write_table(cokriging_table({label: (five, loo)}), args.out)
    return 0


def benchmark(args: Namespace) -> int:
    frame = run_benchmark()
    write_table(frame, args.out)
    print(frame.to_string(index=False))
    return 0


def validate(args: Namespace) -> int:
    frame = run_validation(args.check or None)
    if args.out:
        write_table(frame, args.out)
    print(frame.to_string(index=False))
    failed: List[str] = list(frame.loc[~frame["passed"], "name"])
    if failed:
        logger.error("%d check(s) failed: %s", len(failed), ", ".join(failed))
        return 3
    return 0


def sim_study(args: Namespace) -> int:
    cfg = SimStudyConfig(design=args.design, reps=args.reps, n=args.n, n_test=args.n_test, seed=args.seed,
                         truth=args.truth, axis=args.axis, estimate_axes=args.estimate_axes,
                         n_starts=args.starts or 1, level=args.level, threads=args.threads)
    frame, summary = run_sim_study(cfg)
    write_table(frame, args.out)
    summary_path: Optional[str] = args.summary or f"{args.out}.summary.txt"
    write_key_values(summary, summary_path)
    for key, value in summary.items():
        print(f"{key} = {value}")
    return 0
