from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class ProcessParams(BaseModel):
    """Marginal parameters of one component process."""
    model_config = ConfigDict(frozen=True)

    nu: float = Field(description="Smoothness, > 0")
    a: float = Field(description="Inverse range (1/length), > 0")
    sigma: float = Field(description="Marginal variance, > 0")
    nugget: float = Field(default=0.0, description="Measurement-error variance gamma^2, >= 0")


class CrossSigma(BaseModel):
    """
    Real and imaginary parts of the Hermitian cross matrix Sigma_H.

    ``re`` is stored symmetric and ``im`` antisymmetric with a zero diagonal;
    the diagonal of Sigma_H itself comes from ProcessParams.sigma.
    """
    model_config = ConfigDict(frozen=True)

    re: Tuple[Tuple[float, ...], ...]
    im: Tuple[Tuple[float, ...], ...]

    @classmethod
    def zeros(cls, p: int) -> "CrossSigma":
        z = tuple(tuple(0.0 for _ in range(p)) for _ in range(p))
        return cls(re=z, im=z)

    @classmethod
    def from_pairs(cls, p: int, pairs: dict) -> "CrossSigma":
        """Build from {(j, k): complex sigma_jk} with j < k."""
        re = np.zeros((p, p))
        im = np.zeros((p, p))
        for (j, k), value in pairs.items():
            value = complex(value)
            re[j, k] = re[k, j] = value.real
            im[j, k] = value.imag
            im[k, j] = -value.imag
        return cls(re=_as_tuple(re), im=_as_tuple(im))

    @property
    def p(self) -> int:
        return len(self.re)

    def re_array(self) -> np.ndarray:
        return np.array(self.re, dtype=float)

    def im_array(self) -> np.ndarray:
        return np.array(self.im, dtype=float)

    def value(self, j: int, k: int) -> complex:
        return complex(self.re[j][k], self.im[j][k])


class DirectionalGeometry(BaseModel):
    """Axes of the two-axis sign family of directional measures."""
    model_config = ConfigDict(frozen=True)

    theta_star_im: Tuple[float, ...] = Field(description="Axis of the sign in the imaginary part of mu(dtheta)")
    theta_star_phi: Tuple[float, ...] = Field(description="Axis defining phi(theta) = sign<theta, theta*>")

    @classmethod
    def default(cls, dim: int) -> "DirectionalGeometry":
        e1 = tuple(1.0 if i == 0 else 0.0 for i in range(dim))
        return cls(theta_star_im=e1, theta_star_phi=e1)

    @classmethod
    def from_angles(cls, angle_im: float, angle_phi: float) -> "DirectionalGeometry":
        return cls(
            theta_star_im=(float(np.cos(angle_im)), float(np.sin(angle_im))),
            theta_star_phi=(float(np.cos(angle_phi)), float(np.sin(angle_phi))),
        )


class MMGPair(BaseModel):
    """Extra per-pair parameters of the MMG comparison covariance."""
    model_config = ConfigDict(frozen=True)

    j: int
    k: int
    nu: float
    a: float


def _as_tuple(matrix: np.ndarray) -> Tuple[Tuple[float, ...], ...]:
    return tuple(tuple(float(v) for v in row) for row in matrix)


def matrix_to_tuple(matrix) -> Tuple[Tuple[float, ...], ...]:
    return _as_tuple(np.asarray(matrix, dtype=float))


def unit(vector: List[float]) -> Tuple[float, ...]:
    v = np.asarray(vector, dtype=float)
    return tuple(float(x) for x in v / np.linalg.norm(v))


class DerivedParams(BaseModel):
    """Half-sums and half-differences of a (j, k) pair, always computed from the pair itself."""
    model_config = ConfigDict(frozen=True)

    nu_j: float
    nu_k: float
    a_j: float
    a_k: float

    @classmethod
    def of(cls, pp_j: ProcessParams, pp_k: ProcessParams) -> "DerivedParams":
        return cls(nu_j=pp_j.nu, nu_k=pp_k.nu, a_j=pp_j.a, a_k=pp_k.a)

    @property
    def a_plus(self) -> float:
        return 0.5 * (self.a_j + self.a_k)

    @property
    def a_minus(self) -> float:
        return 0.5 * (self.a_j - self.a_k)

    @property
    def nu_plus(self) -> float:
        return 0.5 * (self.nu_j + self.nu_k)

    @property
    def nu_minus(self) -> float:
        return 0.5 * (self.nu_j - self.nu_k)

    @property
    def equal_nu(self) -> bool:
        return bool(np.isclose(self.nu_j, self.nu_k, rtol=1e-12, atol=0.0))

    @property
    def equal_a(self) -> bool:
        return bool(np.isclose(self.a_j, self.a_k, rtol=1e-12, atol=0.0))
