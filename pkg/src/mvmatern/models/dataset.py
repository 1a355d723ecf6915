from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from src.mvmatern.errors import DatasetError


class Dataset(BaseModel):
    """
    Observation records (location, variable index, value).

    ``coords`` has shape (n, d); ``var`` holds integers in [0, p).
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    coords: np.ndarray
    var: np.ndarray
    value: np.ndarray
    p: int

    @model_validator(mode="before")
    @classmethod
    def _coerce(cls, data):
        if not isinstance(data, dict):
            return data
        coords = np.asarray(data.get("coords"), dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        var = np.asarray(data.get("var"), dtype=int).reshape(-1)
        value = np.asarray(data.get("value"), dtype=float).reshape(-1)
        p = data.get("p")
        if p is None:
            p = int(var.max()) + 1 if var.size else 0
        return {"coords": coords, "var": var, "value": value, "p": int(p)}

    @model_validator(mode="after")
    def _check(self):
        n = self.value.shape[0]
        if self.coords.shape[0] != n or self.var.shape[0] != n:
            raise DatasetError("coords, var and value must have the same number of records")
        if not np.all(np.isfinite(self.coords)):
            raise DatasetError("non-finite coordinate")
        bad = np.flatnonzero(~np.isfinite(self.value))
        if bad.size:
            raise DatasetError("non-finite value", line=int(bad[0]) + 2)
        if n and (self.var.min() < 0 or self.var.max() >= self.p):
            raise DatasetError(f"variable index outside [0, {self.p})")
        for arr in (self.coords, self.var, self.value):
            arr.setflags(write=False)
        return self

    @classmethod
    def from_records(cls, records: Sequence[Tuple[Sequence[float], int, float]], p: Optional[int] = None) -> "Dataset":
        coords = [list(np.atleast_1d(loc)) for loc, _, _ in records]
        return cls(coords=coords, var=[r[1] for r in records], value=[r[2] for r in records], p=p)

    @property
    def n(self) -> int:
        return int(self.value.shape[0])

    @property
    def d(self) -> int:
        return int(self.coords.shape[1])

    def counts(self) -> Dict[int, int]:
        return {j: int(np.sum(self.var == j)) for j in range(self.p)}

    def indices(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.var == j)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(coords=self.coords[idx], var=self.var[idx], value=self.value[idx], p=self.p)

    def permuted(self, order) -> "Dataset":
        return self.subset(order)

    def duplicate_pairs(self) -> List[Tuple[int, int]]:
        """Record index pairs sharing both location and variable."""
        seen: Dict[tuple, int] = {}
        dups = []
        for i in range(self.n):
            key = (int(self.var[i]),) + tuple(self.coords[i].tolist())
            if key in seen:
                dups.append((seen[key], i))
            else:
                seen[key] = i
        return dups

    def centered(self, means: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
        """Values minus per-variable means (empirical when not given)."""
        if means is None:
            means = np.array([self.value[self.var == j].mean() if np.any(self.var == j) else 0.0
                              for j in range(self.p)])
        return self.value - means[self.var], means
