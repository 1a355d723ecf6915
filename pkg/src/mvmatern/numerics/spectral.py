"""
Matrix-valued spectral densities of the multivariate Matérn family.

Convention: C_jk(h) = Cov(Y_j(s+h), Y_k(s)) = ∫ exp(i<h,x>) f_jk(x) dx, so f is
Hermitian at every frequency. In d >= 2 the density is a function of the radius
r and the direction theta; the sign family of directional measures uses

    phi(theta)  = sign<theta, theta*_phi>
    mu_jk(theta) = Re sigma_jk + i sign<theta, theta*_im> Im sigma_jk.
"""
import logging
from typing import List

import numpy as np
from scipy import special

from src.mvmatern.errors import ModelValidationError, SpecialFunctionDomainError
from src.mvmatern.models.model_spec import ModelSpec, Variant
from src.mvmatern.models.process import ProcessParams

logger = logging.getLogger(__name__)

PSD_TOL = 1e-10
UNIT_TOL = 1e-10


def log_normalization_constant(d: int, nu: float, a: float) -> float:
    return nu * np.log(a) + 0.5 * special.gammaln(nu + 0.5 * d) - 0.25 * d * np.log(np.pi) - 0.5 * special.gammaln(nu)


def normalization_constant(d: int, nu: float, a: float) -> float:
    """c(d, nu, a) = a^nu sqrt(Gamma(nu + d/2)) / (pi^{d/4} sqrt(Gamma(nu)))."""
    return float(np.exp(log_normalization_constant(d, nu, a)))


def matern_density(r, nu: float, a: float, sigma: float = 1.0, d: int = 1):
    """Lebesgue density of the Matérn covariance at frequency radius r."""
    r = np.asarray(r, dtype=float)
    log_c2 = 2.0 * log_normalization_constant(d, nu, a)
    return sigma * np.exp(log_c2 - (nu + 0.5 * d) * np.log(a * a + r * r))


def _complex_power(base, w: float):
    return np.exp(-w * np.log(base))


def _mu(model: ModelSpec, j: int, k: int, im_sign):
    s = model.sigma(j, k)
    return s.real + 1j * im_sign * s.imag


def _cross_factor(model: ModelSpec, j: int, k: int, r, phi, im_sign, d: int):
    """Off-diagonal density (Lebesgue, Cartesian) given radius and the two direction signs."""
    pj, pk = model.processes[j], model.processes[k]
    variant = model.variant
    mu = _mu(model, j, k, im_sign)
    if variant == Variant.IM:
        return np.zeros(np.shape(r), dtype=complex)
    if variant == Variant.MMG:
        nu_jk, a_jk = model.mmg_pair(j, k)
        return matern_density(r, nu_jk, a_jk, 1.0, d) * mu
    if variant == Variant.SQEXP:
        return sqexp_cross_density(r, pj.a, pk.a) * mu
    log_cc = log_normalization_constant(d, pj.nu, pj.a) + log_normalization_constant(d, pk.nu, pk.a)
    if variant == Variant.ALT:
        radial = np.exp(log_cc - (0.5 * pj.nu + 0.25 * d) * np.log(pj.a ** 2 + r * r)
                        - (0.5 * pk.nu + 0.25 * d) * np.log(pk.a ** 2 + r * r))
        return radial * mu
    # SMM and SCF share the half-spectral factorization
    left = _complex_power(pj.a + 1j * phi * r, pj.nu + 0.5 * d)
    right = _complex_power(pk.a - 1j * phi * r, pk.nu + 0.5 * d)
    return np.exp(log_cc) * left * mu * right


def cross_density_signed(model: ModelSpec, j: int, k: int, r, phi, im_sign):
    """f_jk (j != k) at radius r with phi(theta) and sign<theta, theta*_im> given explicitly."""
    _check_indices(model, j, k)
    return np.asarray(_cross_factor(model, j, k, np.asarray(r, dtype=float), phi, im_sign, model.dim), dtype=complex)


def sqexp_cross_density(x, a_j: float, a_k: float):
    """Cross density of the squared-exponential family exp(-a h^2), d = 1."""
    x = np.asarray(x, dtype=float)
    return np.exp(-x * x / 8.0 * (1.0 / a_j + 1.0 / a_k)) / (2.0 * np.sqrt(np.pi) * (a_j * a_k) ** 0.25)


def _diagonal(model: ModelSpec, j: int, r, d: int):
    pp: ProcessParams = model.processes[j]
    if model.variant == Variant.SQEXP:
        return pp.sigma * sqexp_cross_density(r, pp.a, pp.a)
    return matern_density(r, pp.nu, pp.a, pp.sigma, d)


def _check_indices(model: ModelSpec, j: int, k: int) -> None:
    if not (0 <= j < model.p and 0 <= k < model.p):
        raise IndexError(f"process index ({j}, {k}) outside a {model.p}-variate model")


def spectral_density_d1(model: ModelSpec, j: int, k: int, x):
    """f_jk(x) on the real line; sign(0) = 0."""
    if model.dim != 1:
        raise SpecialFunctionDomainError("spectral_density_d1 needs a d=1 model")
    _check_indices(model, j, k)
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    r = np.abs(x)
    if j == k:
        out = _diagonal(model, j, r, 1).astype(complex)
    else:
        s = np.sign(x)
        out = _cross_factor(model, j, k, r, s * model.geometry.theta_star_phi[0], s * model.geometry.theta_star_im[0], 1)
    return complex(out) if scalar else out


def spectral_density_cartesian(model: ModelSpec, j: int, k: int, x):
    """f_jk at frequency vectors x of shape (..., d)."""
    _check_indices(model, j, k)
    d = model.dim
    x = np.asarray(x, dtype=float)
    if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        return spectral_density_d1(model, j, k, x)
    r = np.linalg.norm(x, axis=-1)
    if j == k:
        return _diagonal(model, j, r, d).astype(complex)
    phi = np.sign(x @ np.asarray(model.geometry.theta_star_phi))
    im_sign = np.sign(x @ np.asarray(model.geometry.theta_star_im))
    return _cross_factor(model, j, k, r, phi, im_sign, d)


def spectral_density_polar(model: ModelSpec, j: int, k: int, r: float, theta) -> complex:
    """
    Density at radius r and unit direction theta with respect to r^{d-1} dr
    times surface measure on the sphere, so the Jacobian r^{d-1} is included.
    """
    _check_indices(model, j, k)
    d = model.dim
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if not r > 0:
        raise SpecialFunctionDomainError("spectral_density_polar requires r > 0")
    if theta.shape != (d,) or abs(np.linalg.norm(theta) - 1.0) > UNIT_TOL:
        raise SpecialFunctionDomainError(f"theta must be a unit vector in R^{d}")
    jacobian = r ** (d - 1)
    if j == k:
        return complex(_diagonal(model, j, r, d) * jacobian)
    phi = np.sign(theta @ np.asarray(model.geometry.theta_star_phi))
    im_sign = np.sign(theta @ np.asarray(model.geometry.theta_star_im))
    return complex(_cross_factor(model, j, k, r, phi, im_sign, d) * jacobian)


def spectral_density_matrix(model: ModelSpec, x) -> np.ndarray:
    """Cartesian density matrix at frequencies x: shape (..., p, p)."""
    x = np.asarray(x, dtype=float)
    batch = x.shape if model.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1) else x.shape[:-1]
    p = model.p
    out = np.empty(batch + (p, p), dtype=complex)
    for j in range(p):
        out[..., j, j] = spectral_density_cartesian(model, j, j, x)
        for k in range(j + 1, p):
            f = spectral_density_cartesian(model, j, k, x)
            out[..., j, k] = f
            out[..., k, j] = np.conj(f)
    return out


def spectral_coherence(model: ModelSpec, j: int, k: int, x):
    """|f_jk|^2 / (f_jj f_kk) evaluated from the density itself."""
    fjk = spectral_density_cartesian(model, j, k, x)
    fjj = spectral_density_cartesian(model, j, j, x).real
    fkk = spectral_density_cartesian(model, k, k, x).real
    return np.abs(fjk) ** 2 / (fjj * fkk)


def validate_model(model: ModelSpec) -> List[str]:
    """Invariant violations as messages; an empty list means the model is usable."""
    violations: List[str] = []
    p = model.p
    if model.dim not in (1, 2):
        violations.append(f"dim must be 1 or 2 (got {model.dim})")
    if p < 1:
        violations.append("at least one process is required")
    for j, pp in enumerate(model.processes):
        for name, value, strict in (("nu", pp.nu, True), ("a", pp.a, True), ("sigma", pp.sigma, True), ("nugget", pp.nugget, False)):
            if not np.isfinite(value) or (value <= 0 if strict else value < 0):
                violations.append(f"{name}.{j + 1} must be {'> 0' if strict else '>= 0'} (got {value:g})")
    re, im = model.cross.re_array(), model.cross.im_array()
    if re.shape != (p, p) or im.shape != (p, p):
        violations.append(f"cross matrices must be {p}x{p}")
        return violations
    if not np.allclose(re, re.T, rtol=0, atol=1e-14):
        violations.append("re_sigma must be symmetric")
    if not np.allclose(im, -im.T, rtol=0, atol=1e-14) or np.any(np.diag(im) != 0):
        violations.append("im_sigma must be antisymmetric with zero diagonal")
    if not violations:
        sigma_h = model.sigma_matrix()
        eig = np.linalg.eigvalsh(sigma_h)
        trace = float(np.real(np.trace(sigma_h)))
        if eig.min() < -PSD_TOL * trace:
            violations.append(f"Sigma_H is not positive semidefinite (min eigenvalue {eig.min():.3e})")
    for name in ("theta_star_im", "theta_star_phi"):
        axis = np.asarray(getattr(model.geometry, name), dtype=float)
        if axis.shape != (model.dim,):
            violations.append(f"{name} must have {model.dim} components")
        elif abs(np.linalg.norm(axis) - 1.0) > UNIT_TOL:
            violations.append(f"{name} must be a unit vector")
    off = ~np.eye(p, dtype=bool)
    if model.variant == Variant.IM and (np.any(re[off] != 0) or np.any(im != 0)):
        violations.append("IM variant requires zero cross sigma")
    if model.variant == Variant.SCF and p > 1:
        first = model.processes[0]
        if any(not np.isclose(pp.nu, first.nu, rtol=1e-12) or not np.isclose(pp.a, first.a, rtol=1e-12)
               for pp in model.processes[1:]):
            violations.append("SCF variant requires shared nu and a across processes")
    if model.variant == Variant.SQEXP and model.dim != 1:
        violations.append("SQEXP variant is only defined for d=1")
    if model.mmg_extras:
        if model.variant != Variant.MMG:
            violations.append("per-pair nu/a extras are only used by the MMG variant")
        for pair in model.mmg_extras:
            if not (0 <= pair.j < p and 0 <= pair.k < p) or pair.j == pair.k:
                violations.append(f"MMG pair ({pair.j + 1}, {pair.k + 1}) is not an off-diagonal pair")
            if not (pair.nu > 0 and pair.a > 0):
                violations.append(f"MMG pair ({pair.j + 1}, {pair.k + 1}) needs nu > 0 and a > 0")
    return violations


def validated(model: ModelSpec, context: str = "") -> ModelSpec:
    violations = validate_model(model)
    if violations:
        raise ModelValidationError(violations, context or None)
    return model


def is_psd(matrix: np.ndarray, rel_tol: float = 1e-12) -> bool:
    eig = np.linalg.eigvalsh(matrix)
    return bool(eig.min() >= -rel_tol * max(float(np.real(np.trace(matrix))), 0.0))
