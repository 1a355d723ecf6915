"""
Independent numerical references for the closed forms and the FFT backend.

Nothing here calls the closed-form covariance code: values come from
adaptive quadrature of spectral densities and mixture representations, and
from the discrete Hilbert transform.
"""
import logging
from typing import Optional, Tuple

import numpy as np
from scipy import integrate, signal, special

from src.mvmatern.errors import ConvergenceError, SpecialFunctionDomainError
from src.mvmatern.models.config_dto import QuadratureConfig
from src.mvmatern.models.model_spec import ModelSpec, Variant
from src.mvmatern.numerics.spectral import spectral_density_d1

logger = logging.getLogger(__name__)


def default_truncation_radius(model: ModelSpec) -> float:
    return 1e3 * max(1.0, 1.0 / min(pp.a for pp in model.processes))


def _tail_exponent(model: ModelSpec, j: int, k: int) -> Optional[float]:
    """q with |f_jk(x)| ~ x^{-q}; None for Gaussian tails."""
    if model.variant == Variant.SQEXP:
        return None
    if model.variant == Variant.MMG and j != k:
        return 2.0 * model.mmg_pair(j, k)[0] + 1.0
    return model.processes[j].nu + model.processes[k].nu + 1.0


def _quad(fn, lo, hi, cfg: QuadratureConfig, **kwargs) -> Tuple[float, float]:
    value, abserr = integrate.quad(fn, lo, hi, epsabs=cfg.abs_tol, epsrel=cfg.rel_tol,
                                   limit=cfg.max_subdivisions, **kwargs)
    if not np.isfinite(value):
        raise ConvergenceError("quadrature returned a non-finite value")
    return value, abserr


def _fourier(fn, h: float, kind: str, cfg: QuadratureConfig) -> Tuple[float, float]:
    """int_0^inf fn(x) cos|sin(h x) dx by QAWF."""
    if h == 0:
        return (0.0, 0.0) if kind == "sin" else _quad(fn, 0.0, np.inf, cfg)
    sign = np.sign(h) if kind == "sin" else 1.0
    value, abserr = integrate.quad(fn, 0.0, np.inf, weight=kind, wvar=abs(h), epsabs=cfg.abs_tol,
                                   limlst=200, limit=cfg.max_subdivisions)
    if not np.isfinite(value):
        raise ConvergenceError(f"Fourier quadrature did not converge at h={h:g}")
    return sign * value, abserr


def quadrature_cov_detail(model: ModelSpec, j: int, k: int, h: float,
                          config: Optional[QuadratureConfig] = None) -> Tuple[float, float]:
    """
    (C_jk(h), imaginary residue) from C(h) = 2 int_0^inf [cos(hx) Re f(x) - sin(hx) Im f(x)] dx.

    The residue integrates Im[e^{ihx} f(x) + e^{-ihx} f(-x)] and vanishes for a
    Hermitian density.
    """
    if model.dim != 1:
        raise SpecialFunctionDomainError("quadrature_cov supports d = 1 only")
    cfg = config or QuadratureConfig()
    h = float(h)

    def re_f(x):
        return spectral_density_d1(model, j, k, x).real

    def im_f(x):
        return spectral_density_d1(model, j, k, x).imag

    if h == 0:
        radius = cfg.truncation_radius or default_truncation_radius(model)
        body, _ = _quad(re_f, 0.0, radius, cfg, points=[min(pp.a for pp in model.processes)])
        q = _tail_exponent(model, j, k)
        tail = re_f(radius) * radius / (q - 1.0) if q else 0.0
        value = 2.0 * (body + tail)
    else:
        cos_part, _ = _fourier(re_f, h, "cos", cfg)
        sin_part, _ = _fourier(im_f, h, "sin", cfg)
        value = 2.0 * (cos_part - sin_part)

    def re_gap(x):
        return re_f(x) - spectral_density_d1(model, j, k, -x).real

    def im_sum(x):
        return im_f(x) + spectral_density_d1(model, j, k, -x).imag

    residue = abs(_fourier(re_gap, h, "sin", cfg)[0] + _fourier(im_sum, h, "cos", cfg)[0])
    if residue > 1e-8:
        logger.warning("spectral density of channel (%d, %d) is not Hermitian: residue %.2e", j + 1, k + 1, residue)
    return float(value), float(residue)


def quadrature_cov(model: ModelSpec, j: int, k: int, h, config: Optional[QuadratureConfig] = None):
    """C_jk(h) by adaptive quadrature of exp(ihx) f_jk(x) (d = 1)."""
    if np.ndim(h) == 0:
        return quadrature_cov_detail(model, j, k, float(h), config)[0]
    return np.array([quadrature_cov_detail(model, j, k, float(v), config)[0] for v in np.ravel(h)]).reshape(np.shape(h))


def hilbert_numeric(samples, spacing: float = 1.0, interpolant: str = "trigonometric") -> np.ndarray:
    """
    Discrete Hilbert transform F^{-1}[m(w) F[samples]].

    ``trigonometric``: m = -i sign(w), the periodic transform of the trigonometric
    interpolant (H[cos] = sin).

    ``linear``: the transform on the real line of the piecewise-linear interpolant of
    samples that vanish outside the window. The multiplier sums -i sign over every alias
    of w weighted by sinc^2, which keeps cusps (a Matérn covariance at h = 0) from folding
    back across the Nyquist frequency; the periodic cot kernel is then corrected to 1/(pi h)
    through its first-order term.
    """
    samples = np.asarray(samples, dtype=float)
    if spacing <= 0:
        raise ValueError("spacing must be > 0")
    if interpolant == "trigonometric":
        return np.imag(signal.hilbert(samples))
    if interpolant != "linear":
        raise ValueError(f"unknown interpolant {interpolant!r}")
    n = samples.size
    x = np.abs(np.pi * np.fft.fftfreq(n))
    gain = 1.0 - 2.0 * np.sin(x) ** 2 * special.polygamma(1, 1.0 - x / np.pi) / np.pi ** 2
    multiplier = -1j * np.sign(np.fft.fftfreq(n)) * gain
    periodic = np.real(np.fft.ifft(np.fft.fft(samples) * multiplier))
    # (1/P) cot(pi u / P) = 1/(pi u) - pi u / (3 P^2) + O(u^3 / P^4)
    period = n * spacing
    positions = np.arange(n) * spacing
    mass = spacing * np.sum(samples)
    moment = spacing * np.sum(positions * samples)
    return periodic + np.pi / (3.0 * period ** 2) * (positions * mass - moment)


def mixing_density(u, nu: float):
    """g_nu(u) = u^{-nu-1} exp(-1/(4u)) / (4^nu Gamma(nu)), the inverse-gamma mixing law."""
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore"):
        log_g = -(nu + 1.0) * np.log(u) - 0.25 / u - nu * np.log(4.0) - special.gammaln(nu)
    return np.where(u > 0, np.exp(log_g), 0.0)


def _log_scale_mixture(weight, nu: float, z2: float, cfg: QuadratureConfig) -> float:
    """int_0^inf weight(u) g_nu(u) du with u = e^t, split at the mode of the integrand."""
    if z2 > 0:
        y0 = (-nu + np.sqrt(nu * nu + z2)) / (2.0 * z2)
    else:
        y0 = 0.25 / nu
    t0 = float(np.log(y0))

    log_norm = nu * np.log(4.0) + special.gammaln(nu)

    def integrand(t):
        with np.errstate(over="ignore"):
            log_g = -nu * t - 0.25 * np.exp(-t) - log_norm
            if not np.isfinite(log_g):
                return 0.0
            return weight(np.exp(t)) * np.exp(log_g)

    left, _ = _quad(integrand, -np.inf, t0, cfg)
    right, _ = _quad(integrand, t0, np.inf, cfg)
    return left + right


def mixing_density_mass(nu: float, config: Optional[QuadratureConfig] = None) -> float:
    return _log_scale_mixture(lambda u: 1.0, nu, 0.0, config or QuadratureConfig())


def schoenberg_mixture(z: float, nu: float, config: Optional[QuadratureConfig] = None) -> float:
    """int_0^inf exp(-z^2 u) g_nu(u) du, the Matérn correlation at lag z (a = 1)."""
    if z < 0 or nu <= 0:
        raise SpecialFunctionDomainError("schoenberg_mixture needs z >= 0 and nu > 0")
    z2 = float(z) ** 2
    return _log_scale_mixture(lambda u: np.exp(-z2 * u), nu, z2, config or QuadratureConfig())


def dawson_mixture(h: float, nu: float, config: Optional[QuadratureConfig] = None) -> float:
    """
    (2/sqrt(pi)) int_0^inf F(sqrt(u) h) g_nu(u) du with F Dawson's integral.

    Equals the Hilbert transform of the unit Matérn correlation, i.e. the
    imaginary-measure cross-covariance with Im(sigma) = -1.
    """
    if nu <= 0:
        raise SpecialFunctionDomainError("dawson_mixture needs nu > 0")
    if h == 0:
        return 0.0
    value = _log_scale_mixture(lambda u: special.dawsn(np.sqrt(u) * h), nu, float(h) ** 2, config or QuadratureConfig())
    return 2.0 / np.sqrt(np.pi) * value


def matern_density_check(nu: float, d: int, config: Optional[QuadratureConfig] = None) -> float:
    """Total mass of the standardized Matérn spectral density (a = 1) in R^d; should be 1."""
    cfg = config or QuadratureConfig()
    log_c = special.gammaln(nu + 0.5 * d) - 0.5 * d * np.log(np.pi) - special.gammaln(nu)
    if d == 1:
        half, _ = _quad(lambda x: np.exp(log_c - (nu + 0.5) * np.log1p(x * x)), 0.0, np.inf, cfg)
        return 2.0 * half
    if d == 2:
        radial, _ = _quad(lambda r: r * np.exp(log_c - (nu + 1.0) * np.log1p(r * r)), 0.0, np.inf, cfg)
        return 2.0 * np.pi * radial
    raise SpecialFunctionDomainError("matern_density_check supports d in {1, 2}")
