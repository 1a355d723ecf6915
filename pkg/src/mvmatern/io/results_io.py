"""
Result writers. Every float goes out with 17 significant digits.
"""
import logging
from pathlib import Path
from typing import Iterable, List, Mapping, Optional

import numpy as np
import pandas as pd

from src.mvmatern.models.fit_dto import FitResult, LRTResult
from src.mvmatern.models.model_spec import ModelSpec

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    return str(value)


def write_table(frame: pd.DataFrame, path) -> None:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info("wrote %d rows to %s", len(frame), path)


def write_rows(rows: Iterable[Mapping], path, columns: Optional[List[str]] = None) -> pd.DataFrame:
    frame = pd.DataFrame(list(rows), columns=columns)
    write_table(frame, path)
    return frame


def write_key_values(mapping: Mapping, path) -> None:
    Path(path).write_text("".join(f"{key} = {fmt(value)}\n" for key, value in mapping.items()))


def model_fields(model: ModelSpec, prefix: str = "") -> dict:
    """Flat parameter columns (1-based indices) of a model."""
    out = {}
    for j, pp in enumerate(model.processes, start=1):
        out.update({f"{prefix}nu.{j}": pp.nu, f"{prefix}a.{j}": pp.a,
                    f"{prefix}sigma.{j}{j}": pp.sigma, f"{prefix}nugget.{j}": pp.nugget})
    for j in range(model.p):
        for k in range(j + 1, model.p):
            value = model.cross.value(j, k)
            out[f"{prefix}re_sigma.{j + 1}{k + 1}"] = value.real
            out[f"{prefix}im_sigma.{j + 1}{k + 1}"] = value.imag
    if model.dim == 2:
        for name in ("im", "phi"):
            axis = getattr(model.geometry, f"theta_star_{name}")
            out[f"{prefix}axis_angle_{name}"] = float(np.arctan2(axis[1], axis[0]))
    return out


def fit_summary(result: FitResult, prefix: str = "") -> dict:
    out = {
        f"{prefix}variant": result.estimates.variant.value,
        f"{prefix}loglik": result.loglik,
        f"{prefix}aic": result.aic,
        f"{prefix}n_params": result.n_params,
        f"{prefix}converged": result.converged,
        f"{prefix}iterations": result.iterations,
        f"{prefix}backend": result.backend_used,
        f"{prefix}condition_number": result.condition_number if result.condition_number is not None else float("nan"),
    }
    out.update(model_fields(result.estimates, prefix))
    return out


def lrt_summary(result: LRTResult) -> dict:
    out = {"lambda": result.lambda_, "p_value": result.p_value, "df": result.df}
    out.update(fit_summary(result.fit0, "fit0."))
    out.update(fit_summary(result.fit1, "fit1."))
    return out
