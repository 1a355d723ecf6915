"""
Dataset CSV: header ``x1[,x2],var,value``; ``var`` is 1-based in files and
0-based in memory. Line numbers in errors count the header as line 1.
"""
import logging
import re
from typing import List, Optional

import numpy as np
import pandas as pd

from src.mvmatern.errors import DatasetError
from src.mvmatern.models.dataset import Dataset

logger = logging.getLogger(__name__)

_COORD = re.compile(r"^x(\d+)$")


def _coordinate_columns(columns: List[str], d: Optional[int]) -> List[str]:
    coords = [c for c in columns if _COORD.match(c)]
    missing = {"var", "value"} - set(columns)
    if missing:
        raise DatasetError(f"header lacks column(s) {sorted(missing)}", line=1)
    unknown = set(columns) - set(coords) - {"var", "value"}
    if unknown:
        raise DatasetError(f"unknown column(s) {sorted(unknown)}", line=1)
    expected = [f"x{i + 1}" for i in range(len(coords))]
    if coords != expected or not coords:
        raise DatasetError(f"coordinate columns must be {expected or ['x1']} in order", line=1)
    if d is not None and len(coords) != d:
        raise DatasetError(f"file has {len(coords)} coordinate columns, expected d={d}", line=1)
    return coords


def read_dataset(path, d: Optional[int] = None, p: Optional[int] = None) -> Dataset:
    """
    Parse a dataset CSV.

    Args:
        path: File to read.
        d: Declared spatial dimension; a different coordinate count is an error.
        p: Number of variables (defaults to the largest index present).

    Returns:
        The validated Dataset; counts per variable are logged.
    """
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except FileNotFoundError:
        raise DatasetError(f"dataset file not found: {path}")
    except pd.errors.ParserError as exc:
        found = re.search(r"line (\d+)", str(exc))
        raise DatasetError(f"malformed row: {exc}", line=int(found.group(1)) if found else None)
    except pd.errors.EmptyDataError:
        raise DatasetError("dataset file is empty", line=1)

    raw.columns = [c.strip() for c in raw.columns]
    coords_cols = _coordinate_columns(list(raw.columns), d)
    numeric = raw.apply(pd.to_numeric, errors="coerce")
    for i, row in enumerate(numeric.itertuples(index=False)):
        values = np.asarray(row, dtype=float)
        if not np.all(np.isfinite(values)):
            raise DatasetError("malformed or non-finite field", line=i + 2)
    var = numeric["var"].to_numpy()
    bad = np.flatnonzero((var != np.round(var)) | (var < 1))
    if bad.size:
        raise DatasetError("var must be a positive integer", line=int(bad[0]) + 2)
    var = var.astype(int) - 1
    if p is not None and var.size and var.max() >= p:
        raise DatasetError(f"var exceeds p={p}", line=int(np.argmax(var >= p)) + 2)

    dataset = Dataset(coords=numeric[coords_cols].to_numpy(dtype=float), var=var,
                      value=numeric["value"].to_numpy(dtype=float), p=p)
    logger.info("read %d records (d=%d): %s", dataset.n, dataset.d,
                ", ".join(f"var {j + 1}: {c}" for j, c in dataset.counts().items()))
    return dataset


def dataset_frame(dataset: Dataset) -> pd.DataFrame:
    frame = pd.DataFrame(dataset.coords, columns=[f"x{i + 1}" for i in range(dataset.d)])
    frame["var"] = dataset.var + 1
    frame["value"] = dataset.value
    return frame


def write_dataset(dataset: Dataset, path) -> None:
    dataset_frame(dataset).to_csv(path, index=False, float_format="%.17g")


def read_points(path, d: Optional[int] = None) -> np.ndarray:
    """Location list from a CSV with columns x1[,x2] (other columns ignored)."""
    raw = pd.read_csv(path)
    cols = [c for c in raw.columns if _COORD.match(str(c).strip())]
    if not cols:
        raise DatasetError("points file has no x1 column", line=1)
    if d is not None and len(cols) != d:
        raise DatasetError(f"points file has {len(cols)} coordinate columns, expected d={d}", line=1)
    points = raw[cols].to_numpy(dtype=float)
    bad = np.flatnonzero(~np.all(np.isfinite(points), axis=1))
    if bad.size:
        raise DatasetError("non-finite coordinate", line=int(bad[0]) + 2)
    return points
