from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.mvmatern.models.process import CrossSigma, DirectionalGeometry, MMGPair, ProcessParams


class Variant(str, Enum):
    IM = "IM"
    SCF = "SCF"
    SMM = "SMM"
    ALT = "ALT"
    MMG = "MMG"
    SQEXP = "SQEXP"


class ModelSpec(BaseModel):
    """Full parameterization of a p-variate Matérn model."""
    model_config = ConfigDict(frozen=True)

    dim: int = Field(description="Spatial dimension d (1 or 2)")
    variant: Variant
    processes: Tuple[ProcessParams, ...]
    cross: CrossSigma
    geometry: DirectionalGeometry
    mmg_extras: Optional[Tuple[MMGPair, ...]] = None

    @classmethod
    def build(
        cls,
        variant,
        processes: List[ProcessParams],
        cross_pairs: Optional[dict] = None,
        dim: int = 1,
        geometry: Optional[DirectionalGeometry] = None,
        mmg_extras: Optional[List[MMGPair]] = None,
    ) -> "ModelSpec":
        p = len(processes)
        return cls(
            dim=dim,
            variant=Variant(variant),
            processes=tuple(processes),
            cross=CrossSigma.from_pairs(p, cross_pairs or {}),
            geometry=geometry or DirectionalGeometry.default(dim),
            mmg_extras=tuple(mmg_extras) if mmg_extras else None,
        )

    @property
    def p(self) -> int:
        return len(self.processes)

    def sigma(self, j: int, k: int) -> complex:
        """Entry of the Hermitian matrix Sigma_H."""
        if j == k:
            return complex(self.processes[j].sigma, 0.0)
        return self.cross.value(j, k)

    def sigma_matrix(self) -> np.ndarray:
        p = self.p
        out = np.empty((p, p), dtype=complex)
        for j in range(p):
            for k in range(p):
                out[j, k] = self.sigma(j, k)
        return out

    def mmg_pair(self, j: int, k: int) -> Tuple[float, float]:
        """(nu_jk, a_jk) of the MMG cross channel; parsimonious defaults when absent."""
        for pair in self.mmg_extras or ():
            if {pair.j, pair.k} == {j, k}:
                return pair.nu, pair.a
        pj, pk = self.processes[j], self.processes[k]
        return 0.5 * (pj.nu + pk.nu), float(np.sqrt(0.5 * (pj.a ** 2 + pk.a ** 2)))

    def with_cross(self, cross: CrossSigma) -> "ModelSpec":
        return self.model_copy(update={"cross": cross})

    def with_geometry(self, geometry: DirectionalGeometry) -> "ModelSpec":
        return self.model_copy(update={"geometry": geometry})

    def describe(self) -> str:
        parts = [f"{self.variant.value} d={self.dim} p={self.p}"]
        for j, pp in enumerate(self.processes):
            parts.append(f"[{j}] nu={pp.nu:.4g} a={pp.a:.4g} sigma={pp.sigma:.4g} nugget={pp.nugget:.4g}")
        return " ".join(parts)
