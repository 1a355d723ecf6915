"""
Real special functions needed by the closed-form covariances.

Wrappers over scipy.special validate their domains and raise the package's
errors instead of returning nan/inf. The modified Struve function of negative
order and the confluent U used inside Whittaker's W have their own series /
quadrature paths because library support does not cover every case the
covariance formulas hit.
"""
import logging
import math
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import integrate, special

from src.mvmatern.errors import (
    ConvergenceError,
    PoleError,
    SpecialFunctionDomainError,
    SpecialFunctionOverflowError,
)
from src.mvmatern.models.config_dto import SpecFunConfig

logger = logging.getLogger(__name__)


@lru_cache()
def default_config() -> SpecFunConfig:
    return SpecFunConfig()


def _cfg(config: Optional[SpecFunConfig]) -> SpecFunConfig:
    return config if config is not None else default_config()


def _out(values: np.ndarray, scalar: bool):
    return float(values.reshape(-1)[0]) if scalar else values


def is_nonpositive_integer(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def is_half_integer(x: float, tol: float = 0.0) -> bool:
    """True when 2x is an odd integer."""
    twice = 2.0 * x
    return abs(twice - round(twice)) <= tol and int(round(twice)) % 2 == 1


def gamma_fn(x):
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any((x <= 0) & (x == np.round(x))):
        raise PoleError(f"gamma has a pole at non-positive integers (got {x[(x <= 0) & (x == np.round(x))][0]:g})")
    values = special.gamma(x)
    if not np.all(np.isfinite(values)):
        raise SpecialFunctionOverflowError("gamma overflows beyond x ~ 171.6")
    return _out(values, scalar)


def _k_half_integer(n: int, z: np.ndarray) -> np.ndarray:
    # K_{n+1/2}(z) = sqrt(pi/(2z)) e^{-z} sum_k (n+k)!/(k!(n-k)!) (2z)^{-k}
    total = np.zeros_like(z)
    for k in range(n + 1):
        coef = math.factorial(n + k) / (math.factorial(k) * math.factorial(n - k))
        total = total + coef * (2.0 * z) ** (-k)
    return np.sqrt(np.pi / (2.0 * z)) * np.exp(-z) * total


def bessel_k(nu: float, z, half_integer_shortcut: bool = True):
    """Modified Bessel function of the second kind K_nu(z), z > 0."""
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(~(z > 0)):
        raise SpecialFunctionDomainError("bessel_k requires z > 0")
    nu = abs(float(nu))
    if half_integer_shortcut and is_half_integer(nu) and nu <= 10.5:
        values = _k_half_integer(int(nu - 0.5), z)
    else:
        values = special.kv(nu, z)
    if np.any(np.isinf(values)) or np.any(np.isnan(values)):
        raise SpecialFunctionOverflowError(f"K_{nu:g} overflows at z={z.min():g}")
    return _out(values, scalar)


def _power_series(first: np.ndarray, ratio, z: np.ndarray, cfg: SpecFunConfig, name: str) -> np.ndarray:
    """Sum first * prod(ratio(m, q)) with q = (z/2)^2 until the tail is negligible."""
    q = (0.5 * z) ** 2
    term = first.copy()
    total = first.copy()
    for m in range(cfg.max_terms):
        term = term * q / ratio(m)
        total = total + term
        done = (np.abs(term) <= cfg.series_tol * np.abs(total)) | (term == 0)
        if m > 0.5 * np.max(z, initial=0.0) and np.all(done):
            return total
    raise ConvergenceError(f"{name} series did not converge in {cfg.max_terms} terms")


def bessel_i(nu: float, z, config: Optional[SpecFunConfig] = None):
    """Modified Bessel function of the first kind I_nu(z) for real order, z >= 0."""
    cfg = _cfg(config)
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=float))
    nu = float(nu)
    if not np.all(np.isfinite(z)) or np.any(z < 0):
        raise SpecialFunctionDomainError("bessel_i requires finite z >= 0")
    if nu < 0 and nu.is_integer():
        nu = -nu
    if nu < 0 and np.any(z == 0):
        raise SpecialFunctionDomainError("bessel_i of negative non-integer order is singular at z = 0")
    values = np.empty_like(z)
    small = z <= cfg.asymptotic_switch
    if np.any(small):
        zs = z[small]
        first = np.where(zs > 0, (0.5 * zs) ** nu, 1.0 if nu == 0 else 0.0) * special.rgamma(nu + 1.0)
        values[small] = _power_series(first, lambda m: (m + 1.0) * (m + nu + 1.0), zs, cfg, "bessel_i")
    if np.any(~small):
        zl = z[~small]
        if np.any(zl > 700.0):
            raise SpecialFunctionOverflowError(f"I_{nu:g}(z) overflows for z > 700")
        values[~small] = special.iv(nu, zl)
    return _out(values, scalar)


def struve_l(nu: float, z, config: Optional[SpecFunConfig] = None):
    """
    Modified Struve function L_nu(z) by direct summation of its power series,

        L_nu(z) = sum_m (z/2)^{2m+nu+1} / (Gamma(m+3/2) Gamma(m+nu+3/2)),

    valid for negative orders as long as nu + 3/2 is not a non-positive integer.
    """
    cfg = _cfg(config)
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=float))
    nu = float(nu)
    if not math.isfinite(nu) or not np.all(np.isfinite(z)) or np.any(z < 0):
        raise SpecialFunctionDomainError("struve_l requires finite nu and finite z >= 0")
    if is_nonpositive_integer(nu + 1.5):
        raise PoleError(f"struve_l series hits a gamma pole for nu={nu:g}")
    if nu + 1.0 <= 0 and np.any(z == 0):
        raise SpecialFunctionDomainError(f"L_{nu:g}(z) is unbounded at z = 0")
    zpos = np.where(z > 0, z, 1.0)
    first = np.where(z > 0, (0.5 * zpos) ** (nu + 1.0), 0.0) / (special.gamma(1.5) * special.gamma(nu + 1.5))
    values = _power_series(first, lambda m: (m + 1.5) * (m + nu + 1.5), z, cfg, "struve_l")
    if not np.all(np.isfinite(values)):
        raise SpecialFunctionOverflowError(f"L_{nu:g}(z) overflows")
    return _out(values, scalar)


def _struve_m_asymptotic(mu: float, z: np.ndarray, cfg: SpecFunConfig) -> np.ndarray:
    # M_mu(z) = L_mu(z) - I_mu(z) ~ (1/pi) sum_k (-1)^{k+1} Gamma(k+1/2) (z/2)^{mu-2k-1} / Gamma(mu+1/2-k)
    half = 0.5 * z
    total = np.zeros_like(z)
    previous = np.full_like(z, np.inf)
    active = np.ones(z.shape, dtype=bool)
    for k in range(cfg.max_terms):
        term = ((-1.0) ** (k + 1)) * special.gamma(k + 0.5) * half ** (mu - 2 * k - 1) * special.rgamma(mu + 0.5 - k)
        growing = np.abs(term) > np.abs(previous)
        active &= ~growing
        total = total + np.where(active, term, 0.0)
        previous = np.where(term != 0, term, previous)
        if not np.any(active & (np.abs(term) > cfg.series_tol * np.abs(total))):
            break
    return total / np.pi


def struve_bessel_difference(nu: float, z, config: Optional[SpecFunConfig] = None):
    """
    L_{-nu}(z) - I_nu(z) for z >= 0.

    Both terms grow like e^z; above the asymptotic switch the difference is
    taken as M_{-nu}(z) + (2/pi) sin(nu pi) K_nu(z) instead.
    """
    cfg = _cfg(config)
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=float))
    values = np.empty_like(z)
    small = z <= cfg.asymptotic_switch
    if np.any(small):
        values[small] = struve_l(-nu, z[small], cfg) - bessel_i(nu, z[small], cfg)
    if np.any(~small):
        zl = z[~small]
        values[~small] = _struve_m_asymptotic(-nu, zl, cfg) + (2.0 / np.pi) * np.sin(nu * np.pi) * special.kv(nu, zl)
    return _out(values, scalar)


def _hyperu_quadrature(a: float, b: float, z: float, cfg: SpecFunConfig) -> float:
    # U(a,b,z) = z^{1-b}/Gamma(a) int_0^inf e^{-s} s^{a-1} (z+s)^{b-a-1} ds   (s = z t)
    if a <= 0:
        raise SpecialFunctionDomainError("integral representation of U requires a > 0")

    def integrand(s):
        return math.exp(-s) * s ** (a - 1.0) * (z + s) ** (b - a - 1.0)

    cut = min(z, 1.0)
    total = 0.0
    for lo, hi in ((0.0, cut), (cut, 1.0), (1.0, np.inf)):
        if hi <= lo:
            continue
        value, _ = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-12, limit=cfg.max_terms)
        total += value
    return total * z ** (1.0 - b) / special.gamma(a)


def hyperu(a: float, b: float, z, method: str = "auto", config: Optional[SpecFunConfig] = None):
    """Confluent hypergeometric U(a, b, z) for z > 0."""
    cfg = _cfg(config)
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(~(z > 0)):
        raise SpecialFunctionDomainError("hyperu requires z > 0")
    if method == "quadrature":
        return _out(np.array([_hyperu_quadrature(a, b, float(zi), cfg) for zi in z]), scalar)
    values = special.hyperu(a, b, z)
    if method == "series":
        return _out(values, scalar)
    bad = ~np.isfinite(values)
    if a > 0:
        bad |= values <= 0
        near_integer_b = abs(b - round(b)) < 1e-6
        if near_integer_b:
            # fast path loses digits when b is (close to) an integer; confirm against quadrature
            reference = np.array([_hyperu_quadrature(a, b, float(zi), cfg) for zi in z])
            disagree = np.abs(values - reference) > 1e-8 * np.abs(reference)
            if np.any(disagree):
                logger.warning("hyperu(a=%.6g, b=%.12g): fast path off by up to %.2e, using quadrature",
                               a, b, float(np.max(np.abs(values - reference) / np.abs(reference))))
            values = np.where(disagree, reference, values)
            bad &= False
    if np.any(bad):
        if a <= 0:
            raise ConvergenceError(f"U({a:g}, {b:g}, z) did not converge and has no quadrature fallback")
        values = values.copy()
        values[bad] = [_hyperu_quadrature(a, b, float(zi), cfg) for zi in z[bad]]
    return _out(values, scalar)


def log_whittaker_w(kappa: float, mu: float, z, method: str = "auto", config: Optional[SpecFunConfig] = None):
    """log W_{kappa,mu}(z) for z > 0 (W itself is positive when 1/2 + |mu| - kappa > 0)."""
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(~(z > 0)):
        raise SpecialFunctionDomainError("whittaker_w requires z > 0")
    mu = abs(float(mu))
    u = np.atleast_1d(hyperu(0.5 + mu - kappa, 1.0 + 2.0 * mu, z, method=method, config=config))
    if np.any(u <= 0):
        raise ConvergenceError("log_whittaker_w is only defined where W > 0")
    return _out(-0.5 * z + (0.5 + mu) * np.log(z) + np.log(u), scalar)


def whittaker_w(kappa: float, mu: float, z, method: str = "auto", config: Optional[SpecFunConfig] = None):
    """
    Whittaker W_{kappa,mu}(z) = e^{-z/2} z^{1/2+mu} U(1/2+mu-kappa, 1+2mu, z).

    W is even in mu, so |mu| is used throughout.
    """
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(~(z > 0)):
        raise SpecialFunctionDomainError("whittaker_w requires z > 0")
    mu = abs(float(mu))
    u = np.atleast_1d(hyperu(0.5 + mu - kappa, 1.0 + 2.0 * mu, z, method=method, config=config))
    return _out(np.exp(-0.5 * z + (0.5 + mu) * np.log(z)) * u, scalar)


def expint_e1(x):
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(~(x > 0)):
        raise SpecialFunctionDomainError("E1 requires x > 0")
    return _out(special.exp1(x), scalar)


def expint_ei(x):
    """Exponential integral Ei(x), principal value for x > 0."""
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x == 0) or not np.all(np.isfinite(x)):
        raise SpecialFunctionDomainError("Ei requires finite x != 0")
    values = special.expi(x)
    if np.any(np.isinf(values)):
        raise SpecialFunctionOverflowError("Ei overflows beyond x ~ 709")
    return _out(values, scalar)


_SCALED_SWITCH = 50.0


def _asymptotic_scaled(x: np.ndarray, alternating: bool) -> np.ndarray:
    # sum_k (+-1)^k k! / x^{k+1}, truncated at the smallest term
    total = np.zeros_like(x)
    term = 1.0 / x
    for k in range(int(_SCALED_SWITCH)):
        total = total + term
        term = term * (k + 1) / x * (-1.0 if alternating else 1.0)
    return total


def scaled_e1(x):
    """e^{x} E1(x) for x > 0, stable for large x."""
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(~(x > 0)):
        raise SpecialFunctionDomainError("E1 requires x > 0")
    big = x > _SCALED_SWITCH
    values = np.empty_like(x)
    values[~big] = np.exp(x[~big]) * special.exp1(x[~big])
    values[big] = _asymptotic_scaled(x[big], alternating=True)
    return _out(values, scalar)


def scaled_ei(x):
    """e^{-x} Ei(x) for x > 0, stable for large x."""
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(~(x > 0)):
        raise SpecialFunctionDomainError("scaled_ei requires x > 0")
    big = x > _SCALED_SWITCH
    values = np.empty_like(x)
    values[~big] = np.exp(-x[~big]) * special.expi(x[~big])
    values[big] = _asymptotic_scaled(x[big], alternating=False)
    return _out(values, scalar)


def dawson(x):
    """Dawson's integral F(x) = e^{-x^2} int_0^x e^{t^2} dt."""
    scalar = np.ndim(x) == 0
    values = special.dawsn(np.atleast_1d(np.asarray(x, dtype=float)))
    return _out(values, scalar)
