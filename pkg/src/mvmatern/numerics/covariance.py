"""
Cross-covariance evaluation: closed forms where they exist, FFT grids elsewhere.

``CovFunction`` decides per channel (j, k) and per part of sigma_jk (real or
imaginary) which backend serves it and records the decision in
``channel_backends``. C_kj(h) = C_jk(-h) is used for the lower triangle.
"""
import logging
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy import special

from src.mvmatern.errors import BackendUnavailableError, SpecialFunctionDomainError
from src.mvmatern.models.config_dto import FFTGrid, SpecFunConfig
from src.mvmatern.models.dataset import Dataset
from src.mvmatern.models.model_spec import ModelSpec, Variant
from src.mvmatern.models.process import CrossSigma, DerivedParams, DirectionalGeometry, ProcessParams, matrix_to_tuple
from src.mvmatern.numerics import closed_form
from src.mvmatern.numerics.closed_form import (  # noqa: F401  re-exported covariance operations
    cross_cov_altfact_d1,
    cross_cov_real_d1,
    cross_cov_sqexp_d1,
    matern,
)
from src.mvmatern.numerics.fft_backend import FFTCovGrid, default_grid, lag_axis

logger = logging.getLogger(__name__)

BACKENDS = ("auto", "closed", "fft")
Channel = Tuple[int, int]


def _pair_model(pp_j: ProcessParams, pp_k: ProcessParams, sigma: complex, variant=Variant.SMM) -> ModelSpec:
    return ModelSpec.build(variant, [pp_j, pp_k], {(0, 1): sigma}, dim=1)


def cross_cov_imag_d1(h, pp_j: ProcessParams, pp_k: ProcessParams, im_sigma: float = 1.0,
                      backend: str = "auto", grid: Optional[FFTGrid] = None,
                      config: Optional[SpecFunConfig] = None):
    """
    Imaginary-measure SMM cross-covariance. Closed forms cover
    equal (nu, a) with nu not a multiple of 1/2, nu_j = nu_k = 1/2 and
    equal-a nu = 3/2; every other pair goes through the FFT grid.
    """
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}")
    if backend != "fft":
        value = closed_form.imag_closed(h, pp_j, pp_k, im_sigma, config)
        if value is not None:
            return value
        if backend == "closed":
            raise BackendUnavailableError(
                f"no closed form for the imaginary channel with nu=({pp_j.nu:g}, {pp_k.nu:g}), a=({pp_j.a:g}, {pp_k.a:g})")
    model = _pair_model(pp_j, pp_k, complex(0.0, im_sigma))
    h_arr = np.asarray(h, dtype=float)
    fgrid = FFTCovGrid(model, grid or default_grid(model, float(np.max(np.abs(h_arr), initial=0.0))),
                       part="imag", channels=[(0, 1)])
    values = fgrid.evaluate(0, 1, h_arr)
    return float(values) if np.ndim(h) == 0 else values


def _closed_real(model: ModelSpec, j: int, k: int, config: Optional[SpecFunConfig]) -> Optional[Callable]:
    """Real part per unit Re(sigma_jk) as a function of the (d-reduced) lag."""
    pj, pk = model.processes[j], model.processes[k]
    variant = model.variant
    if model.dim == 2:
        if variant == Variant.SCF:
            return lambda h: closed_form.matern(h, pj.a, pj.nu, 1.0)
        if variant == Variant.MMG:
            nu_jk, a_jk = model.mmg_pair(j, k)
            return lambda h: closed_form.matern(h, a_jk, nu_jk, 1.0)
        if variant == Variant.ALT and DerivedParams.of(pj, pk).equal_a:
            return lambda h: closed_form.cross_cov_altfact_d1(h, pj, pk, 1.0)
        return None
    if variant in (Variant.SMM, Variant.SCF):
        return lambda h: closed_form.cross_cov_real_d1(h, pj, pk, 1.0, config=config)
    if variant == Variant.MMG:
        nu_jk, a_jk = model.mmg_pair(j, k)
        return lambda h: closed_form.matern(h, a_jk, nu_jk, 1.0)
    if variant == Variant.ALT and closed_form.alt_closed_case(pj, pk) is not None:
        return lambda h: closed_form.cross_cov_altfact_d1(h, pj, pk, 1.0)
    return None


def _closed_imag(model: ModelSpec, j: int, k: int, config: Optional[SpecFunConfig]) -> Optional[Callable]:
    """Imaginary part per unit Im(sigma_jk), d = 1 only."""
    if model.dim != 1:
        return None
    pj, pk = model.processes[j], model.processes[k]
    if model.variant == Variant.MMG:
        nu_jk, a_jk = model.mmg_pair(j, k)
        pj = pk = ProcessParams(nu=nu_jk, a=a_jk, sigma=1.0)
    elif model.variant == Variant.ALT:
        dp = DerivedParams.of(pj, pk)
        if not (dp.equal_a and dp.equal_nu):
            return None
    if closed_form.imag_closed_case(pj, pk) is None:
        return None
    return lambda h: closed_form.imag_closed(h, pj, pk, 1.0, config)


class CovFunction:
    """
    Lag -> covariance for every channel of a model.

    backend: ``closed`` fails when some channel has no closed form, ``fft``
    serves every channel (diagonals included) from the grid, ``auto`` uses
    closed forms where available and the grid for the rest.
    """

    def __init__(self, model: ModelSpec, backend: str = "auto", grid: Optional[FFTGrid] = None,
                 config: Optional[SpecFunConfig] = None, max_lag: float = 0.0):
        if backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        self.model = model
        self.backend = backend
        self.config = config
        self.channel_backends: Dict[Channel, str] = {}
        self._closed: Dict[Channel, List[Callable]] = {}
        fft_parts: Dict[str, List[Channel]] = {}
        p = model.p
        for j in range(p):
            for k in range(j, p):
                self._plan(j, k, fft_parts)
        self.grid: Optional[FFTGrid] = None
        self._grids: Dict[str, FFTCovGrid] = {}
        if fft_parts:
            self.grid = grid or default_grid(model, max_lag)
            for part, channels in fft_parts.items():
                self._grids[part] = FFTCovGrid(model, self.grid, part=part, channels=channels)
        elif grid is not None:
            self.grid = grid

    def _plan(self, j: int, k: int, fft_parts: Dict[str, List[Channel]]) -> None:
        model = self.model
        ch = (j, k)
        self._closed[ch] = []
        if self.backend == "fft":
            fft_parts.setdefault("full", []).append(ch)
            self.channel_backends[ch] = "fft"
            return
        if j == k:
            pp = model.processes[j]
            if model.variant == Variant.SQEXP:
                self._closed[ch].append(lambda h, pp=pp: closed_form.sqexp(h, pp.a, pp.sigma))
            else:
                self._closed[ch].append(lambda h, pp=pp: closed_form.matern(h, pp.a, pp.nu, pp.sigma))
            self.channel_backends[ch] = "closed"
            return
        sigma = model.sigma(j, k)
        if model.variant == Variant.IM or sigma == 0:
            self.channel_backends[ch] = "closed"
            return
        if model.variant == Variant.SQEXP:
            pj, pk = model.processes[j], model.processes[k]
            s = complex(sigma.real, sigma.imag * np.sign(model.geometry.theta_star_im[0]))
            self._closed[ch].append(lambda h: closed_form.cross_cov_sqexp_d1(h, pj.a, pk.a, s))
            self.channel_backends[ch] = "closed"
            return
        used = set()
        needs = []
        if sigma.real != 0:
            real_fn = _closed_real(model, j, k, self.config)
            if real_fn is None:
                needs.append("real")
            else:
                self._closed[ch].append(self._oriented(real_fn, sigma.real, odd=False))
                used.add("closed")
        if sigma.imag != 0:
            imag_fn = _closed_imag(model, j, k, self.config)
            if imag_fn is None:
                needs.append("imag")
            else:
                self._closed[ch].append(self._oriented(imag_fn, sigma.imag, odd=True))
                used.add("closed")
        if needs and self.backend == "closed":
            raise BackendUnavailableError(
                f"{model.variant.value} channel ({j + 1}, {k + 1}) has no closed form for its {' and '.join(needs)} part")
        if len(needs) == 2:
            fft_parts.setdefault("full", []).append(ch)
            used.add("fft")
        elif needs:
            fft_parts.setdefault(needs[0], []).append(ch)
            used.add("fft")
        self.channel_backends[ch] = "+".join(sorted(used)) or "closed"

    def _oriented(self, fn: Callable, weight: float, odd: bool) -> Callable:
        """
        Apply the d = 1 geometry to a closed form derived for theta*_phi = theta*_im = +1.

        theta*_im = -1 negates the imaginary part; theta*_phi = -1 (SMM/SCF)
        mirrors the lag and negates the imaginary part once more.
        """
        model = self.model
        if model.dim == 1:
            im_sign = float(np.sign(model.geometry.theta_star_im[0]))
            mirror = model.variant in (Variant.SMM, Variant.SCF) and model.geometry.theta_star_phi[0] < 0
        else:
            im_sign, mirror = 1.0, False
        factor = weight * (im_sign if odd else 1.0) * (-1.0 if (odd and mirror) else 1.0)
        if mirror:
            return lambda h: factor * np.asarray(fn(-h))
        return lambda h: factor * np.asarray(fn(h))

    @property
    def backend_used(self) -> str:
        kinds = set()
        for value in self.channel_backends.values():
            kinds.update(value.split("+"))
        if kinds == {"closed"}:
            return "closed"
        if kinds == {"fft"}:
            return "fft"
        return "mixed"

    def _reduce(self, h: np.ndarray) -> np.ndarray:
        """Lag argument for closed forms: signed scalar lag (d=1) or its norm (d=2)."""
        if self.model.dim == 1:
            return h[..., 0] if (h.ndim > 1 and h.shape[-1] == 1) else h
        return np.linalg.norm(h, axis=-1)

    def __call__(self, j: int, k: int, h):
        h_arr = np.asarray(h, dtype=float)
        if j > k:
            values = self._evaluate(k, j, -h_arr)
        else:
            values = self._evaluate(j, k, h_arr)
        values = np.asarray(values, dtype=float)
        return float(values) if values.ndim == 0 else values

    def _evaluate(self, j: int, k: int, h: np.ndarray) -> np.ndarray:
        if self.model.dim == 2 and (h.ndim == 0 or h.shape[-1] != 2):
            raise SpecialFunctionDomainError("d=2 lags must have a trailing axis of length 2")
        ch = (j, k)
        reduced = self._reduce(h)
        total = np.zeros(np.shape(reduced))
        for fn in self._closed[ch]:
            total = total + fn(reduced)
        for fgrid in self._grids.values():
            if ch in fgrid.channels:
                total = total + fgrid.evaluate(j, k, h)
        return total

    def matrix(self, h) -> np.ndarray:
        """p x p covariance matrix at a single lag."""
        p = self.model.p
        out = np.empty((p, p))
        for j in range(p):
            for k in range(p):
                out[j, k] = self(j, k, h)
        return out

    def lag_grid(self) -> np.ndarray:
        grid = self.grid or default_grid(self.model)
        axis = lag_axis(grid)
        if self.model.dim == 1:
            return axis
        return np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1)


@lru_cache(maxsize=8)
def _cached_cov_function(model: ModelSpec, backend: str, grid: Optional[FFTGrid]) -> CovFunction:
    return CovFunction(model, backend=backend, grid=grid)


def get_cov_function(model: ModelSpec, backend: str = "auto", grid: Optional[FFTGrid] = None) -> CovFunction:
    """
    Cached CovFunction per (model, backend, grid) in d = 1. Planar models are rebuilt on
    every call: each of their FFT channels holds an N x N residual.
    """
    if model.dim == 2:
        return CovFunction(model, backend=backend, grid=grid)
    return _cached_cov_function(model, backend, grid)


def build_cov_grid_fft(model: ModelSpec, grid: Optional[FFTGrid] = None) -> CovFunction:
    return CovFunction(model, backend="fft", grid=grid or default_grid(model))


def cross_cov(model: ModelSpec, j: int, k: int, h, backend: str = "auto", grid: Optional[FFTGrid] = None):
    """Re(sigma_jk) C^Re_jk(h) + Im(sigma_jk) C^Im_jk(h) for any variant."""
    h_arr = np.asarray(h, dtype=float)
    if grid is None:
        extent = np.abs(h_arr) if model.dim == 1 else np.linalg.norm(np.atleast_1d(h_arr), axis=-1)
        grid = default_grid(model, float(np.max(extent, initial=0.0)))
    return get_cov_function(model, backend, grid)(j, k, h)


def dataset_extent(dataset: Dataset) -> float:
    if dataset.n == 0:
        return 0.0
    return float(np.linalg.norm(np.ptp(dataset.coords, axis=0)))


def cov_matrix(model: ModelSpec, dataset: Dataset, cov_fn: Optional[CovFunction] = None,
               include_nugget: bool = True) -> np.ndarray:
    """
    Joint covariance Gamma of all records: block (j, k) holds C_jk(s_row - s_col),
    plus the nugget of each record's variable on the diagonal.
    """
    if cov_fn is None:
        cov_fn = CovFunction(model, max_lag=dataset_extent(dataset))
    coords = dataset.coords
    gamma = np.zeros((dataset.n, dataset.n))
    groups = [dataset.indices(j) for j in range(model.p)]
    for j in range(model.p):
        for k in range(j, model.p):
            rows, cols = groups[j], groups[k]
            if rows.size == 0 or cols.size == 0:
                continue
            lags = coords[rows][:, None, :] - coords[cols][None, :, :]
            block = np.asarray(cov_fn(j, k, lags), dtype=float).reshape(rows.size, cols.size)
            if j == k:
                block = 0.5 * (block + block.T)
            gamma[np.ix_(rows, cols)] = block
            gamma[np.ix_(cols, rows)] = block.T
    if include_nugget:
        nuggets = np.array([pp.nugget for pp in model.processes])
        gamma[np.diag_indices_from(gamma)] += nuggets[dataset.var]
    return gamma


def reflect_model(model: ModelSpec) -> ModelSpec:
    """Conjugated directional measure and negated phi axis: C_reflected(h) = C(-h)."""
    cross = CrossSigma(re=model.cross.re, im=matrix_to_tuple(-model.cross.im_array()))
    geometry = DirectionalGeometry(
        theta_star_im=model.geometry.theta_star_im,
        theta_star_phi=tuple(-v for v in model.geometry.theta_star_phi),
    )
    return model.with_cross(cross).with_geometry(geometry)


def coherence_sq(model: ModelSpec, j: int, k: int, theta) -> float:
    """|mu_jk(theta)|^2 / (mu_jj mu_kk) for the sign family of directional measures."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    s = float(np.sign(theta @ np.asarray(model.geometry.theta_star_im)))
    sigma = model.sigma(j, k)
    mu = complex(sigma.real, s * sigma.imag)
    return float(abs(mu) ** 2 / (model.processes[j].sigma * model.processes[k].sigma))


def tail_ratio(h: float, pp_j: ProcessParams, pp_k: ProcessParams, sigma: complex = 1.0) -> float:
    """
    C_jk(h) over its large-lag equivalent.

    Real sigma: Re(sigma) c*_jk (a_j h)^{nu_j - 1/2} e^{-a_j h}. Purely imaginary
    sigma with equal (nu, a): the ratio is scaled so that it tends to sign(h) Im(sigma).
    """
    sigma = complex(sigma)
    if abs(h) < 1.0 / pp_j.a:
        logger.warning("tail_ratio at h=%g is below 1/a_j=%g and not meaningful", h, 1.0 / pp_j.a)
    if sigma.imag == 0:
        if h <= 0:
            raise SpecialFunctionDomainError("tail_ratio needs h > 0")
        dp = DerivedParams.of(pp_j, pp_k)
        log_c = (0.5 * np.log(dp.a_j) + dp.nu_k * np.log(dp.a_k)
                 + 0.5 * (special.gammaln(dp.nu_k + 0.5) - special.gammaln(dp.nu_j + 0.5))
                 + np.log(2.0 * np.sqrt(np.pi)) - (dp.nu_k + 0.5) * np.log(2.0 * dp.a_plus)
                 - 0.5 * (special.gammaln(dp.nu_j) + special.gammaln(dp.nu_k)))
        z = dp.a_j * h
        log_approx = log_c + (dp.nu_j - 0.5) * np.log(z) - z
        value = closed_form.cross_cov_real_d1(h, pp_j, pp_k, 1.0)
        return float(value / np.exp(log_approx))
    if sigma.real != 0:
        raise ValueError("tail_ratio handles purely real or purely imaginary sigma")
    dp = DerivedParams.of(pp_j, pp_k)
    if not (dp.equal_a and dp.equal_nu):
        raise ValueError("imaginary tail_ratio needs equal nu and a")
    nu, a = dp.nu_j, dp.a_j
    value = cross_cov_imag_d1(h, pp_j, pp_k, sigma.imag)
    return float(value * np.sqrt(np.pi) * special.gamma(nu) * a * abs(h) / (-2.0 * special.gamma(nu + 0.5)))


def tangent_constant_sq(nu: float, a: float, sigma: float = 1.0) -> float:
    """c^2 such that the rescaled increment variance tends to |s|^{2 nu}."""
    return float(2.0 * sigma * special.gamma(1.0 - nu) * (0.5 * a) ** (2.0 * nu) / special.gamma(1.0 + nu))


def tangent_fbm_gap(epsilon: float, nu: float, a: float, s1: float, s2: float, sigma: float = 1.0) -> float:
    """|Cov_eps(s1, s2) - Cov_fBm(s1, s2)| for the scalar Matérn with nu in (0, 1)."""
    if not 0.0 < nu < 1.0:
        raise SpecialFunctionDomainError("tangent process limit needs 0 < nu < 1")
    if epsilon <= 0:
        raise SpecialFunctionDomainError("epsilon must be > 0")

    def cov(h):
        return closed_form.matern(h, a, nu, sigma)

    increments = cov(epsilon * (s1 - s2)) - cov(epsilon * s1) - cov(epsilon * s2) + sigma
    cov_eps = increments / (epsilon ** (2.0 * nu) * tangent_constant_sq(nu, a, sigma))
    cov_fbm = 0.5 * (abs(s1) ** (2 * nu) + abs(s2) ** (2 * nu) - abs(s1 - s2) ** (2 * nu))
    return float(abs(cov_eps - cov_fbm))


def covariance_symmetric(model: ModelSpec) -> bool:
    """True iff C(h) = C(-h): every correlated pair has a real measure and, for SMM/SCF, equal (nu, a)."""
    for j in range(model.p):
        for k in range(j + 1, model.p):
            sigma = model.sigma(j, k)
            if model.variant == Variant.IM or sigma == 0:
                continue
            if sigma.imag != 0:
                return False
            if model.variant in (Variant.SMM, Variant.SCF):
                dp = DerivedParams.of(model.processes[j], model.processes[k])
                if not (dp.equal_nu and dp.equal_a):
                    return False
    return True


def is_separable(model: ModelSpec) -> bool:
    """Equal (nu, a) across processes and a real cross matrix: C_jk(h) = sigma_jk rho(h)."""
    if np.any(model.cross.im_array() != 0):
        return False
    first = model.processes[0]
    shapes = [(pp.nu, pp.a) for pp in model.processes]
    if model.variant == Variant.MMG:
        shapes += [model.mmg_pair(j, k) for j in range(model.p) for k in range(j + 1, model.p)]
    if model.variant == Variant.SQEXP:
        shapes = [(first.nu, a) for _, a in shapes]
    return all(np.isclose(nu, first.nu, rtol=1e-12) and np.isclose(a, first.a, rtol=1e-12) for nu, a in shapes)


def max_correlation_lag(cov_fn: CovFunction, j: int, k: int):
    """Lag maximizing |C_jk(h)| / sqrt(sigma_jj sigma_kk) over the central half of the lag grid."""
    lags = cov_fn.lag_grid()
    half = 0.5 * (cov_fn.grid or default_grid(cov_fn.model)).half_width
    if cov_fn.model.dim == 1:
        lags = lags[np.abs(lags) <= half]
    else:
        lags = lags[np.all(np.abs(lags) <= half, axis=-1)]
    scale = np.sqrt(cov_fn.model.processes[j].sigma * cov_fn.model.processes[k].sigma)
    values = np.abs(np.asarray(cov_fn(j, k, lags))) / scale
    best = int(np.argmax(values))
    if cov_fn.model.dim == 1:
        return float(lags[best])
    return tuple(float(v) for v in lags[best])
