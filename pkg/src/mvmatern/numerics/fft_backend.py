"""
Covariances by inverse FFT of the spectral density on a regular grid.

Frequencies x_n = (n - N/2) pi/L and lags h_m = (m - N/2) 2L/N, so that
C(h_m) = sum_n exp(i h_m x_n) f(x_n) dx. With singularity subtraction the
density is first reduced by references with known covariances:

- a Matérn density carrying the even power-law tail,
- an odd i sign(x) Cauchy term removing the jump at x = 0 (covariance R),
- an even |x|/(a^2+x^2)^2 term removing the kink at x = 0 (d = 1 only),
- in d = 2, Gaussian-damped line terms removing the jumps across
  <x, theta*_im> = 0 and <x, theta*_phi> = 0,

leaving a smooth residual whose transform converges quickly; the reference
covariances are added back exactly at every evaluated lag.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from src.mvmatern.config import settings
from src.mvmatern.errors import SpecialFunctionDomainError
from src.mvmatern.models.config_dto import FFTGrid
from src.mvmatern.models.model_spec import ModelSpec, Variant
from src.mvmatern.models.process import CrossSigma, DerivedParams, ProcessParams, matrix_to_tuple
from src.mvmatern.numerics import closed_form, specfun
from src.mvmatern.numerics.spectral import (
    cross_density_signed,
    log_normalization_constant,
    matern_density,
    spectral_density_cartesian,
    sqexp_cross_density,
)

logger = logging.getLogger(__name__)

Channel = Tuple[int, int]


class Reference(NamedTuple):
    name: str
    density: Callable[[np.ndarray], np.ndarray]
    covariance: Callable[[np.ndarray], np.ndarray]


def default_grid(model: ModelSpec, max_lag: float = 0.0, points_per_axis: Optional[int] = None) -> FFTGrid:
    """L = max(min half width, 8 / min a, 2 * max lag); N from settings per dimension."""
    scales = [pp.a for pp in model.processes] + [pair.a for pair in model.mmg_extras or ()]
    half_width = max(settings.FFT_MIN_HALF_WIDTH, 8.0 / min(scales), 2.0 * float(max_lag))
    if points_per_axis is None:
        points_per_axis = settings.FFT_POINTS_D1 if model.dim == 1 else settings.FFT_POINTS_D2
    return FFTGrid(half_width=half_width, points_per_axis=points_per_axis,
                   interpolation="linear" if model.dim == 1 else "bilinear")


def lag_axis(grid: FFTGrid) -> np.ndarray:
    n = grid.points_per_axis
    return (np.arange(n) - n // 2) * grid.spacing


def frequency_axis(grid: FFTGrid) -> np.ndarray:
    n = grid.points_per_axis
    return (np.arange(n) - n // 2) * grid.frequency_spacing


def grid_diagnostics(model: ModelSpec, grid: FFTGrid) -> List[str]:
    """Coarseness warnings for a grid/model pair (empty when the grid is adequate)."""
    notes = []
    min_a = min(pp.a for pp in model.processes)
    max_a = max(pp.a for pp in model.processes)
    if grid.points_per_axis < 256:
        notes.append(f"grid has only {grid.points_per_axis} points per axis (< 256)")
    if grid.half_width < 5.0 / min_a:
        notes.append(f"half width {grid.half_width:g} < 5/min(a) = {5.0 / min_a:g}; tails are cut")
    if grid.spacing * max_a > 0.5:
        notes.append(f"lag spacing {grid.spacing:.3g} is coarse for a = {max_a:g} (Nyquist {grid.points_per_axis * grid.frequency_spacing / 2:.3g})")
    return notes


def part_model(model: ModelSpec, part: str) -> ModelSpec:
    """Model restricted to the real or imaginary part of the cross matrix."""
    if part == "full":
        return model
    cross = model.cross
    zeros = matrix_to_tuple(np.zeros((model.p, model.p)))
    if part == "real":
        return model.with_cross(CrossSigma(re=cross.re, im=zeros))
    if part == "imag":
        return model.with_cross(CrossSigma(re=zeros, im=cross.im))
    raise ValueError(f"unknown part {part!r}")


def _matern_reference(weight: float, nu: float, a: float, d: int) -> Reference:
    def density(x):
        r = np.abs(x) if d == 1 else np.linalg.norm(x, axis=-1)
        return weight * matern_density(r, nu, a, 1.0, d)

    def covariance(h):
        dist = np.abs(h) if d == 1 else np.linalg.norm(h, axis=-1)
        return weight * closed_form.matern(dist, a, nu, 1.0)

    return Reference("matern", density, covariance)


def _jump_reference(weight: float, a: float) -> Reference:
    # i sign(x) (a/pi)/(a^2+x^2) transforms to R(h, a, a)
    return Reference(
        "jump",
        lambda x: 1j * np.sign(x) * weight * (a / np.pi) / (a * a + x * x),
        lambda h: weight * closed_form.laplace_hilbert(h, a, a),
    )


def _kink_reference(weight: float, a: float) -> Reference:
    return Reference(
        "kink",
        lambda x: weight * np.abs(x) / (a * a + x * x) ** 2,
        lambda h: weight * closed_form.kink_cov(h, a),
    )


def _origin_expansion(model: ModelSpec, j: int, k: int, d: int):
    """
    (P0, kappa1, kappa2) with f_jk(x)/mu = P0 exp(i kappa1 x - kappa2 x^2 / 2 + ...) for x -> 0+.
    """
    pj, pk = model.processes[j], model.processes[k]
    phi = float(np.sign(model.geometry.theta_star_phi[0])) if d == 1 else 1.0
    if model.variant == Variant.MMG:
        nu_jk, a_jk = model.mmg_pair(j, k)
        alpha = nu_jk + 0.5 * d
        p0 = float(matern_density(0.0, nu_jk, a_jk, 1.0, d))
        return p0, 0.0, 2.0 * alpha / a_jk ** 2
    if model.variant == Variant.SQEXP:
        p0 = float(sqexp_cross_density(0.0, pj.a, pk.a))
        return p0, 0.0, 0.25 * (1.0 / pj.a + 1.0 / pk.a)
    alpha, beta = pj.nu + 0.5 * d, pk.nu + 0.5 * d
    log_p0 = (log_normalization_constant(d, pj.nu, pj.a) + log_normalization_constant(d, pk.nu, pk.a)
              - alpha * np.log(pj.a) - beta * np.log(pk.a))
    kappa1 = phi * (beta / pk.a - alpha / pj.a) if model.variant in (Variant.SMM, Variant.SCF) else 0.0
    return float(np.exp(log_p0)), kappa1, alpha / pj.a ** 2 + beta / pk.a ** 2


def _line_shapes(model: ModelSpec, j: int, k: int) -> List[Tuple[float, float]]:
    if model.variant == Variant.MMG:
        return [model.mmg_pair(j, k)] * 2
    return [(pp.nu, pp.a) for pp in (model.processes[j], model.processes[k])]


def _line_transforms(model: ModelSpec, j: int, k: int, grid: FFTGrid):
    """
    Tables (v, E, O) of the line transforms of the d = 2 radial factor R(t) of channel (j, k):
    E(v) = int e^{ivt} R(t) dt and O(v) = int e^{ivt} i sign(t) R(t) dt (None when R is real).

    Along a line the d = 2 factor is a d = 1 factor with nu + 1/2 up to a constant, so both come
    from d = 1 covariances of that auxiliary pair.
    """
    shapes = _line_shapes(model, j, k)
    ratio = float(np.exp(sum(log_normalization_constant(2, nu, a) - log_normalization_constant(1, nu + 0.5, a)
                             for nu, a in shapes)))
    top = np.sqrt(2.0) * grid.half_width
    v = np.linspace(-top, top, 4 * grid.points_per_axis + 1)
    pj, pk = (ProcessParams(nu=nu + 0.5, a=a, sigma=1.0) for nu, a in shapes)
    aux = ModelSpec.build(model.variant if model.variant != Variant.MMG else Variant.SMM,
                          [pj, pk], {(0, 1): complex(1.0, 1.0)}, dim=1)
    odd = None
    if model.variant == Variant.MMG:
        even = closed_form.matern(v, pj.a, pj.nu, 1.0)
    elif model.variant == Variant.ALT:
        even = closed_form.cross_cov_altfact_d1(v, pj, pk, 1.0)
        if even is None:
            even = FFTCovGrid(aux, default_grid(aux, 1.01 * top), part="real", channels=[(0, 1)]).evaluate(0, 1, v)
    else:
        even = closed_form.cross_cov_real_d1(v, pj, pk, 1.0)
        dp = DerivedParams.of(pj, pk)
        if not (dp.equal_nu and dp.equal_a):
            odd = closed_form.imag_closed(v, pj, pk, 1.0)
            if odd is None:
                odd = FFTCovGrid(aux, default_grid(aux, 1.01 * top), part="imag",
                                 channels=[(0, 1)]).evaluate(0, 1, v)
            odd = ratio * np.asarray(odd, dtype=float)
    return v, ratio * np.asarray(even, dtype=float), odd


def _line_reference(name: str, normal: np.ndarray, width: float, profile: Callable,
                    v: np.ndarray, transform: np.ndarray) -> Reference:
    """
    sign(u) exp(-u^2 / 2 s^2) H(t) in coordinates u = <x, n>, t = <x, n_perp>, where H is
    the half-jump of the density across the line and int e^{ivt} H(t) dt = i K(v).
    """
    tangent = np.array([-normal[1], normal[0]])

    def density(x):
        u = x @ normal
        return np.sign(u) * np.exp(-0.5 * (u / width) ** 2) * profile(x @ tangent)

    def covariance(h):
        h_n, h_t = h @ normal, h @ tangent
        gauss = 2.0 * np.sqrt(2.0) * width * specfun.dawson(h_n * width / np.sqrt(2.0))
        return -gauss * np.interp(h_t, v, transform)

    return Reference(name, density, covariance)


def _line_references(model: ModelSpec, j: int, k: int, grid: FFTGrid) -> List[Reference]:
    """
    d = 2 references removing the jumps of f_jk across the lines <x, theta*_im> = 0 and
    <x, theta*_phi> = 0.
    """
    sigma = model.sigma(j, k)
    re, im = sigma.real, sigma.imag
    n_im = np.asarray(model.geometry.theta_star_im, dtype=float)
    n_phi = np.asarray(model.geometry.theta_star_phi, dtype=float)
    radial_only = model.variant in (Variant.ALT, Variant.MMG)
    cosine = float(n_im @ n_phi)
    parallel = radial_only or abs(cosine) > 1.0 - 1e-12
    v, even, odd = _line_transforms(model, j, k, grid)
    odd_sym = 0.5 * (odd + odd[::-1]) if odd is not None else np.zeros_like(v)
    nyquist = 0.5 * grid.points_per_axis * grid.frequency_spacing
    width = min(min(a for _, a in _line_shapes(model, j, k)), nyquist / 8.0)

    def half_jump(phi_sides, im_sides):
        def profile(t):
            r = np.abs(t)
            plus = cross_density_signed(model, j, k, r, phi_sides[0](t), im_sides[0](t))
            minus = cross_density_signed(model, j, k, r, phi_sides[1](t), im_sides[1](t))
            return 0.5 * (plus - minus)
        return profile

    refs: List[Reference] = []
    if parallel:
        side = 1.0 if radial_only else float(np.sign(cosine))
        transform = im * 0.5 * (even + even[::-1]) - side * re * odd_sym
        if np.any(transform != 0):
            profile = half_jump((lambda t: side, lambda t: -side), (lambda t: 1.0, lambda t: -1.0))
            refs.append(_line_reference("line_im", n_im, width, profile, v, transform))
        return refs

    # sign of phi along the im-line tangent, and of <x, theta*_im> along the phi-line tangent
    side_im = float(np.sign(np.array([-n_im[1], n_im[0]]) @ n_phi))
    side_phi = float(np.sign(np.array([-n_phi[1], n_phi[0]]) @ n_im))
    if im != 0:
        profile = half_jump((lambda t: side_im * np.sign(t),) * 2, (lambda t: 1.0, lambda t: -1.0))
        transform = im * (even if side_im > 0 else even[::-1])
        refs.append(_line_reference("line_im", n_im, width, profile, v, transform))
    transform = -re * odd_sym + side_phi * im * 0.5 * (even - even[::-1])
    if np.any(transform != 0):
        profile = half_jump((lambda t: 1.0, lambda t: -1.0), (lambda t: side_phi * np.sign(t),) * 2)
        refs.append(_line_reference("line_phi", n_phi, width, profile, v, transform))
    return refs


def channel_references(model: ModelSpec, j: int, k: int, grid: Optional[FFTGrid] = None) -> List[Reference]:
    d = model.dim
    if j == k:
        pp = model.processes[j]
        if model.variant == Variant.SQEXP:
            return [Reference("sqexp", lambda x: pp.sigma * sqexp_cross_density(x, pp.a, pp.a),
                              lambda h: closed_form.sqexp(h, pp.a, pp.sigma))]
        return [_matern_reference(pp.sigma, pp.nu, pp.a, d)]
    if model.variant == Variant.IM:
        return []
    sigma = model.sigma(j, k)
    re, im = sigma.real, sigma.imag
    pj, pk = model.processes[j], model.processes[k]
    dp = DerivedParams.of(pj, pk)
    refs: List[Reference] = []

    # even tail
    if model.variant == Variant.MMG:
        nu_jk, a_jk = model.mmg_pair(j, k)
        if re != 0:
            refs.append(_matern_reference(re, nu_jk, a_jk, d))
    elif model.variant == Variant.SQEXP:
        if re != 0:
            refs.append(Reference("sqexp", lambda x: re * sqexp_cross_density(x, pj.a, pk.a),
                                  lambda h: closed_form.cross_cov_sqexp_d1(h, pj.a, pk.a, complex(re, 0.0))))
    else:
        log_cc = log_normalization_constant(d, pj.nu, pj.a) + log_normalization_constant(d, pk.nu, pk.a)
        if model.variant == Variant.ALT:
            tail = re
        else:
            # Re[e^{-i pi phi nu_-} mu(theta)] averaged over directions
            u = np.asarray(model.geometry.theta_star_phi, dtype=float)
            v = np.asarray(model.geometry.theta_star_im, dtype=float)
            agreement = 1.0 - 2.0 * np.arccos(np.clip(u @ v, -1.0, 1.0)) / np.pi
            tail = np.cos(np.pi * dp.nu_minus) * re + agreement * np.sin(np.pi * dp.nu_minus) * im
        weight = np.exp(log_cc - 2.0 * log_normalization_constant(d, dp.nu_plus, dp.a_plus)) * tail
        if weight != 0:
            refs.append(_matern_reference(float(weight), dp.nu_plus, dp.a_plus, d))

    if d == 1 and im != 0:
        p0, kappa1, kappa2 = _origin_expansion(model, j, k, d)
        im_sign = float(np.sign(model.geometry.theta_star_im[0]))
        a_s = float(np.sqrt(2.0 / (kappa2 + kappa1 ** 2)))
        refs.append(_jump_reference(np.pi * a_s * p0 * im_sign * im, a_s))
        if kappa1 != 0:
            refs.append(_kink_reference(-p0 * kappa1 * im_sign * im * a_s ** 4, a_s))
    if d == 2 and grid is not None and model.variant != Variant.SQEXP:
        refs += _line_references(model, j, k, grid)
    return refs


def _sided_density(model: ModelSpec, j: int, k: int, x: np.ndarray) -> np.ndarray:
    """Cross density on a d = 2 grid; points on a discontinuity line get the mean of both sides."""
    r = np.linalg.norm(x, axis=-1)
    phi = np.sign(x @ np.asarray(model.geometry.theta_star_phi, dtype=float))
    im_sign = np.sign(x @ np.asarray(model.geometry.theta_star_im, dtype=float))
    total = np.zeros(r.shape, dtype=complex)
    for phi_side in (1.0, -1.0):
        for im_side in (1.0, -1.0):
            weight = (np.where(phi == 0, 0.5, phi == phi_side) * np.where(im_sign == 0, 0.5, im_sign == im_side))
            total += weight * cross_density_signed(model, j, k, r, phi_side, im_side)
    return total


def _inverse_fft(values: np.ndarray, grid: FFTGrid) -> np.ndarray:
    n, dx = grid.points_per_axis, grid.frequency_spacing
    d = values.ndim
    out = np.fft.fftshift(np.fft.ifftn(np.fft.ifftshift(values))) * (n * dx) ** d
    peak = np.max(np.abs(out.real))
    residue = np.max(np.abs(out.imag))
    if peak > 0 and residue > 1e-8 * peak:
        logger.warning("inverse FFT left an imaginary residue %.2e (peak %.2e)", residue, peak)
    return out.real


def fft_channel(model: ModelSpec, j: int, k: int, grid: FFTGrid,
                references: Sequence[Reference] = ()) -> np.ndarray:
    """Residual covariance of channel (j, k) on the lag grid."""
    x = frequency_axis(grid)
    if model.dim == 1:
        freq = x
    else:
        freq = np.stack(np.meshgrid(x, x, indexing="ij"), axis=-1)
    if model.dim == 2 and j != k:
        f = _sided_density(model, j, k, freq)
    else:
        f = np.asarray(spectral_density_cartesian(model, j, k, freq), dtype=complex)
    for ref in references:
        f = f - ref.density(freq)
    # the band-edge row/column has no mirrored partner on the grid
    if model.dim == 1:
        f[0] = 0.0
    else:
        f[0, :] = 0.0
        f[:, 0] = 0.0
    return _inverse_fft(f, grid)


class FFTCovGrid:
    """
    Gridded covariance channels of one model, interpolated between lags.

    Only channels j <= k are transformed; C_kj(h) = C_jk(-h) supplies the rest.
    """

    def __init__(self, model: ModelSpec, grid: FFTGrid, part: str = "full",
                 channels: Optional[Sequence[Channel]] = None, max_workers: Optional[int] = None):
        if model.dim not in (1, 2):
            raise SpecialFunctionDomainError("FFT grids support d = 1 and d = 2 only")
        self.model = model
        self.grid = grid
        self.part = part
        self.lags = lag_axis(grid)
        for note in grid_diagnostics(model, grid):
            logger.warning("FFT grid: %s", note)
        source = part_model(model, part)
        if channels is None:
            channels = [(j, k) for j in range(model.p) for k in range(j, model.p)]
        channels = [(min(j, k), max(j, k)) for j, k in channels]
        self._references: Dict[Channel, List[Reference]] = {
            ch: channel_references(source, *ch, grid=grid) if grid.singularity_subtraction else [] for ch in channels
        }
        workers = max_workers or settings.THREADS
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = pool.map(lambda ch: fft_channel(source, ch[0], ch[1], grid, self._references[ch]), channels)
            self._residuals: Dict[Channel, np.ndarray] = dict(zip(channels, results))
        self._interpolators: Dict[Channel, RegularGridInterpolator] = {
            ch: RegularGridInterpolator((self.lags, self.lags), values, method="linear")
            for ch, values in self._residuals.items()
        } if model.dim == 2 else {}
        logger.debug("built %d FFT channel(s) with L=%g N=%d", len(channels), grid.half_width, grid.points_per_axis)

    @property
    def channels(self) -> List[Channel]:
        return list(self._residuals)

    def _check_range(self, h: np.ndarray) -> None:
        top = self.lags[-1]
        if np.any(h < self.lags[0]) or np.any(h > top):
            raise SpecialFunctionDomainError(
                f"lag outside the FFT grid [{self.lags[0]:g}, {top:g}]; increase half_width")

    def evaluate(self, j: int, k: int, h) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        if j > k:
            return self.evaluate(k, j, -h)
        if (j, k) not in self._residuals:
            raise KeyError(f"channel ({j}, {k}) was not built")
        if self.model.dim == 1:
            if h.ndim and h.shape[-1] == 1 and h.ndim > 1:
                h = h[..., 0]
            self._check_range(h)
            residual = np.interp(h, self.lags, self._residuals[(j, k)])
        else:
            self._check_range(h)
            residual = self._interpolators[(j, k)](h.reshape(-1, 2)).reshape(h.shape[:-1])
        total = np.asarray(residual, dtype=float)
        for ref in self._references[(j, k)]:
            total = total + ref.covariance(h)
        return total

    def values_on_grid(self, j: int, k: int) -> np.ndarray:
        """Channel values at every grid lag (d=1: shape (N,), d=2: (N, N))."""
        if self.model.dim == 1:
            return self.evaluate(j, k, self.lags)
        mesh = np.stack(np.meshgrid(self.lags, self.lags, indexing="ij"), axis=-1)
        return self.evaluate(j, k, mesh)
