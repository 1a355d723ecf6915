"""
Closed-form covariances for d = 1.

All functions are vectorized over the lag ``h`` and return a float for scalar
input. The real-measure cross-covariance goes through Whittaker's W; the
imaginary-measure one has elementary/Struve forms only for a few parameter
pairs, reported by ``imag_closed_case``.
"""
import logging
from typing import Optional

import numpy as np
from scipy import special

from src.mvmatern.models.config_dto import SpecFunConfig
from src.mvmatern.models.process import DerivedParams, ProcessParams
from src.mvmatern.numerics import specfun
from src.mvmatern.numerics.spectral import log_normalization_constant

logger = logging.getLogger(__name__)

LOG2 = np.log(2.0)
ORIGIN_LIMIT = 1e-8


def _prep(h):
    scalar = np.ndim(h) == 0
    return np.atleast_1d(np.asarray(h, dtype=float)), scalar


def _out(values: np.ndarray, scalar: bool):
    return float(values.reshape(-1)[0]) if scalar else values


def matern(h, a: float, nu: float, sigma: float = 1.0):
    """sigma 2^{1-nu}/Gamma(nu) (a|h|)^nu K_nu(a|h|), equal to sigma at h = 0."""
    h, scalar = _prep(h)
    z = a * np.abs(h)
    values = np.where(z == 0, float(sigma), np.where(np.isinf(z), 0.0, np.nan))
    pos = (z > 0) & np.isfinite(z)
    if np.any(pos):
        zp = z[pos]
        with np.errstate(over="ignore", invalid="ignore"):
            v = sigma * np.exp((1.0 - nu) * LOG2 - special.gammaln(nu) + nu * np.log(zp) - zp) * special.kve(nu, zp)
        # kve overflows only in the origin limit, where the value tends to sigma
        v = np.where(~np.isfinite(v) & (zp < ORIGIN_LIMIT), sigma, v)
        values[pos] = v
    return _out(values, scalar)


def real_cross_at_zero(pp_j: ProcessParams, pp_k: ProcessParams) -> float:
    """C^Re_jk(0) per unit Re(sigma_jk)."""
    dp = DerivedParams.of(pp_j, pp_k)
    log_value = (dp.nu_j * np.log(dp.a_j) + dp.nu_k * np.log(dp.a_k) - 2.0 * dp.nu_plus * np.log(dp.a_plus)
                 + special.gammaln(2.0 * dp.nu_plus)
                 - 0.5 * (special.gammaln(2.0 * dp.nu_j) + special.gammaln(2.0 * dp.nu_k)))
    return float(np.exp(log_value))


def cross_cov_real_d1(h, pp_j: ProcessParams, pp_k: ProcessParams, re_sigma: float = 1.0,
                      method: str = "auto", config: Optional[SpecFunConfig] = None):
    """
    Real-measure SMM cross-covariance

        Re(sigma) c_j c_k (pi/a_+) (|h|/2a_+)^{nu_+ - 1/2} e^{-h a_-} W_{±nu_-, nu_+}(2 a_+ |h|) / Gamma(nu_{j|k} + 1/2)

    with kappa = +nu_- and Gamma(nu_j + 1/2) for h > 0, mirrored for h < 0.
    Equal smoothness reduces to a shifted Bessel K form, used directly.
    """
    h, scalar = _prep(h)
    dp = DerivedParams.of(pp_j, pp_k)
    values = np.empty_like(h)
    zero = h == 0
    values[zero] = real_cross_at_zero(pp_j, pp_k)
    nz = ~zero
    if np.any(nz):
        hz = h[nz]
        ah = np.abs(hz)
        if dp.equal_nu:
            nu = dp.nu_j
            z = dp.a_plus * ah
            log_v = (LOG2 - nu * np.log(2.0 * dp.a_plus) + nu * np.log(dp.a_j * dp.a_k * ah)
                     - special.gammaln(nu) - hz * dp.a_minus - z)
            values[nz] = np.exp(log_v) * special.kve(nu, z)
        else:
            log_cc = log_normalization_constant(1, dp.nu_j, dp.a_j) + log_normalization_constant(1, dp.nu_k, dp.a_k)
            out = np.empty_like(hz)
            for positive in (True, False):
                mask = hz > 0 if positive else hz < 0
                if not np.any(mask):
                    continue
                kappa = dp.nu_minus if positive else -dp.nu_minus
                nu_gamma = dp.nu_j if positive else dp.nu_k
                log_w = np.atleast_1d(specfun.log_whittaker_w(kappa, dp.nu_plus, 2.0 * dp.a_plus * ah[mask],
                                                              method=method, config=config))
                out[mask] = np.exp(log_cc + np.log(np.pi / dp.a_plus)
                                   + (dp.nu_plus - 0.5) * np.log(ah[mask] / (2.0 * dp.a_plus))
                                   - hz[mask] * dp.a_minus + log_w - special.gammaln(nu_gamma + 0.5))
            values[nz] = out
    return _out(re_sigma * values, scalar)


def laplace_hilbert(h, a_j: float, a_k: float):
    """
    R(h, a_j, a_k) = -sign(h)/pi (e^{a_j|h|} E1(a_j|h|) + e^{-a_k|h|} Ei(a_k|h|)), 0 at h = 0.

    R(h, a, a) is minus the Hilbert transform of e^{-a|h|}.
    """
    h, scalar = _prep(h)
    values = np.zeros_like(h)
    nz = h != 0
    if np.any(nz):
        ah = np.abs(h[nz])
        values[nz] = -np.sign(h[nz]) / np.pi * (specfun.scaled_e1(a_j * ah) + specfun.scaled_ei(a_k * ah))
    return _out(values, scalar)


def kink_cov(h, a: float):
    """Covariance of the density |x| / (a^2 + x^2)^2."""
    h, scalar = _prep(h)
    values = np.full_like(h, 1.0 / (a * a))
    nz = h != 0
    if np.any(nz):
        ah = a * np.abs(h[nz])
        values[nz] = (2.0 / a - np.abs(h[nz]) * (specfun.scaled_e1(ah) + specfun.scaled_ei(ah))) / (2.0 * a)
    return _out(values, scalar)


def _is_half_multiple(nu: float) -> bool:
    twice = 2.0 * nu
    return abs(twice - round(twice)) < 1e-12


def imag_closed_case(pp_j: ProcessParams, pp_k: ProcessParams) -> Optional[str]:
    """Which elementary/Struve form serves the imaginary channel, or None."""
    dp = DerivedParams.of(pp_j, pp_k)
    if not dp.equal_nu:
        return None
    nu = dp.nu_j
    if np.isclose(nu, 0.5, rtol=0, atol=1e-12):
        return "laplace"
    if not dp.equal_a:
        return None
    if np.isclose(nu, 1.5, rtol=0, atol=1e-12):
        return "matern32"
    if not _is_half_multiple(nu):
        return "struve"
    return None


def imag_struve(h, nu: float, a: float, im_sigma: float = 1.0, config: Optional[SpecFunConfig] = None):
    """Im(sigma) pi sign(h)/(2 cos(pi nu)) 2^{1-nu}/Gamma(nu) (a|h|)^nu (L_{-nu} - I_nu)(a|h|)."""
    h, scalar = _prep(h)
    values = np.zeros_like(h)
    nz = h != 0
    if np.any(nz):
        z = a * np.abs(h[nz])
        diff = np.atleast_1d(specfun.struve_bessel_difference(nu, z, config))
        coef = np.pi / (2.0 * np.cos(np.pi * nu)) * np.exp((1.0 - nu) * LOG2 - special.gammaln(nu))
        values[nz] = np.sign(h[nz]) * coef * z ** nu * diff
    return _out(im_sigma * values, scalar)


def imag_laplace(h, a_j: float, a_k: float, im_sigma: float = 1.0):
    """nu_j = nu_k = 1/2: the asymmetric-Laplace imaginary channel."""
    h, scalar = _prep(h)
    values = np.empty_like(h)
    neg, pos, zero = h < 0, h > 0, h == 0
    if np.any(neg):
        values[neg] = laplace_hilbert(h[neg], a_j, a_k)
    if np.any(pos):
        values[pos] = laplace_hilbert(h[pos], a_k, a_j)
    values[zero] = np.log(a_k / a_j) / np.pi
    scale = np.sqrt(a_j * a_k) / (0.5 * (a_j + a_k))
    return _out(im_sigma * scale * values, scalar)


def imag_matern32(h, a: float, im_sigma: float = 1.0):
    """nu = 3/2, equal a: (a|h| + 1) R(h, a, a) - (2 a h e^{a|h|}/pi) Ei(-a|h|)."""
    h, scalar = _prep(h)
    values = np.zeros_like(h)
    nz = h != 0
    if np.any(nz):
        hz = h[nz]
        ah = a * np.abs(hz)
        # e^{x} Ei(-x) = -e^{x} E1(x)
        values[nz] = (ah + 1.0) * laplace_hilbert(hz, a, a) + 2.0 * a * hz / np.pi * specfun.scaled_e1(ah)
    return _out(im_sigma * values, scalar)


def imag_closed(h, pp_j: ProcessParams, pp_k: ProcessParams, im_sigma: float = 1.0,
                config: Optional[SpecFunConfig] = None):
    case = imag_closed_case(pp_j, pp_k)
    if case == "laplace":
        return imag_laplace(h, pp_j.a, pp_k.a, im_sigma)
    if case == "matern32":
        return imag_matern32(h, pp_j.a, im_sigma)
    if case == "struve":
        return imag_struve(h, pp_j.nu, pp_j.a, im_sigma, config)
    return None


def alt_closed_case(pp_j: ProcessParams, pp_k: ProcessParams) -> Optional[str]:
    dp = DerivedParams.of(pp_j, pp_k)
    if dp.equal_a:
        return "matern"
    if dp.equal_nu and np.isclose(dp.nu_j, 1.5, rtol=0, atol=1e-12):
        return "exp_pair"
    return None


def cross_cov_altfact_d1(h, pp_j: ProcessParams, pp_k: ProcessParams, re_sigma: float = 1.0):
    """
    Real channel of the symmetric factorization c_j c_k (a_j^2+x^2)^{-nu_j/2-1/4} (a_k^2+x^2)^{-nu_k/2-1/4}.

    Closed forms exist for a_j = a_k (a Matérn with nu_+) and for
    nu_j = nu_k = 3/2 with a_j != a_k; other pairs return None.
    """
    case = alt_closed_case(pp_j, pp_k)
    if case is None:
        return None
    dp = DerivedParams.of(pp_j, pp_k)
    cc = np.exp(log_normalization_constant(1, dp.nu_j, dp.a_j) + log_normalization_constant(1, dp.nu_k, dp.a_k))
    if case == "matern":
        c_plus2 = np.exp(2.0 * log_normalization_constant(1, dp.nu_plus, dp.a_j))
        return re_sigma * cc / c_plus2 * np.asarray(matern(h, dp.a_j, dp.nu_plus, 1.0))[()]
    h, scalar = _prep(h)
    ah = np.abs(h)
    aj, ak = dp.a_j, dp.a_k
    values = cc * np.pi / (aj * ak) * (aj * np.exp(-ak * ah) - ak * np.exp(-aj * ah)) / (aj * aj - ak * ak)
    return _out(re_sigma * values, scalar)


def cross_cov_sqexp_d1(h, a_j: float, a_k: float, sigma: complex):
    """(a_j a_k)^{1/4}/sqrt(a_+) [Re s exp(-(a_j a_k/a_+) h^2) - Im s (2/sqrt(pi)) F(sqrt(a_j a_k/a_+) h)]."""
    h, scalar = _prep(h)
    sigma = complex(sigma)
    a_plus = 0.5 * (a_j + a_k)
    rate = a_j * a_k / a_plus
    scale = (a_j * a_k) ** 0.25 / np.sqrt(a_plus)
    values = scale * (sigma.real * np.exp(-rate * h * h) - sigma.imag * 2.0 / np.sqrt(np.pi) * special.dawsn(np.sqrt(rate) * h))
    return _out(values, scalar)


def sqexp(h, a: float, sigma: float = 1.0):
    h, scalar = _prep(h)
    return _out(sigma * np.exp(-a * h * h), scalar)
