"""
Oracle suite: closed forms and the FFT backend against quadrature, mixture
representations and the discrete Hilbert transform.
"""
import logging
from typing import Callable, List, NamedTuple

import numpy as np
import pandas as pd

from src.mvmatern.errors import MaternError
from src.mvmatern.models.config_dto import FFTGrid
from src.mvmatern.models.model_spec import ModelSpec
from src.mvmatern.models.process import ProcessParams
from src.mvmatern.numerics import closed_form, oracle, specfun
from src.mvmatern.numerics.covariance import CovFunction, cross_cov_imag_d1, tangent_fbm_gap
from src.mvmatern.numerics.fft_backend import FFTCovGrid, default_grid

logger = logging.getLogger(__name__)


class Check(NamedTuple):
    name: str
    tolerance: float
    measure: Callable[[], float]


def _schoenberg() -> float:
    errors = [abs(oracle.schoenberg_mixture(z, nu) - closed_form.matern(z, 1.0, nu))
              for nu in (0.5, 1.3) for z in (0.1, 0.5, 1.0, 2.0)]
    return max(errors)


def _density_mass() -> float:
    return max(abs(oracle.matern_density_check(nu, d) - 1.0) for nu in (0.5, 1.5) for d in (1, 2))


def _dawson() -> float:
    pp = ProcessParams(nu=0.7, a=1.0, sigma=1.0)
    return max(abs(oracle.dawson_mixture(h, 0.7) - cross_cov_imag_d1(h, pp, pp, im_sigma=-1.0))
               for h in (-1.2, 0.3, 2.0))


def _hilbert() -> float:
    n, half_width = 2 ** 21, 100.0
    lags = (np.arange(n) - n // 2) * (2.0 * half_width / n)
    centre = np.abs(lags) <= 5.0
    errors = []
    for nu in (0.4, 0.75):
        transform = oracle.hilbert_numeric(closed_form.matern(lags, 1.0, nu), lags[1] - lags[0], interpolant="linear")
        errors.append(np.max(np.abs(transform[centre] + closed_form.imag_struve(lags[centre], nu, 1.0))))
    return float(max(errors))


def _quadrature_real() -> float:
    pj, pk = ProcessParams(nu=0.5, a=8.0, sigma=1.0), ProcessParams(nu=0.75, a=12.0, sigma=1.0)
    model = ModelSpec.build("SMM", [pj, pk], {(0, 1): 0.4}, dim=1)
    return max(abs(oracle.quadrature_cov(model, 0, 1, h) - closed_form.cross_cov_real_d1(h, pj, pk, 0.4))
               for h in (-0.3, 0.0, 0.2))


def _quadrature_imag() -> float:
    pp = ProcessParams(nu=0.7, a=1.0, sigma=1.0)
    model = ModelSpec.build("SMM", [pp, pp], {(0, 1): 1j}, dim=1)
    return max(abs(oracle.quadrature_cov(model, 0, 1, h) - closed_form.imag_struve(h, 0.7, 1.0)) for h in (0.5, 1.5))


def _fft_vs_closed() -> float:
    pj = ProcessParams(nu=0.7, a=1.0, sigma=1.0)
    pk = ProcessParams(nu=0.7, a=1.0, sigma=1.0)
    model = ModelSpec.build("SMM", [pj, pk], {(0, 1): 0.3 + 0.5j}, dim=1)
    lags = np.linspace(-3.0, 3.0, 61)
    closed = CovFunction(model, backend="closed")(0, 1, lags)
    fft = CovFunction(model, backend="fft", max_lag=3.0)(0, 1, lags)
    return float(np.max(np.abs(closed - fft)))


def _axis_d2() -> float:
    pp = ProcessParams(nu=0.75, a=1.0, sigma=1.0)
    model = ModelSpec.build("SMM", [pp, pp], {(0, 1): 0.5}, dim=2)
    grid = FFTCovGrid(model, FFTGrid(half_width=32.0, points_per_axis=1024), channels=[(0, 1)])
    r = np.linspace(0.0, 3.0, 13)
    lags = np.concatenate([np.stack([r, 0 * r], axis=-1), np.stack([0 * r, r], axis=-1)])
    expected = 0.5 * closed_form.matern(np.linalg.norm(lags, axis=-1), 1.0, 0.75)
    return float(np.max(np.abs(grid.evaluate(0, 1, lags) - expected)))


def _axis_d2_imag() -> float:
    # mu = i sign(theta_1): C(b e1) follows b^nu (L_{-nu} - I_nu)(b), C vanishes across e1
    pp = ProcessParams(nu=0.75, a=1.0, sigma=1.0)
    model = ModelSpec.build("SMM", [pp, pp], {(0, 1): 1j}, dim=2)
    grid = FFTCovGrid(model, default_grid(model), channels=[(0, 1)])
    b = np.array([0.5, 1.0, 2.0])
    ratio = grid.evaluate(0, 1, np.stack([b, 0 * b], axis=-1)) / (b ** 0.75 * specfun.struve_bessel_difference(0.75, b))
    across = grid.evaluate(0, 1, np.stack([0 * b, b], axis=-1))
    return float(max(np.ptp(ratio) / np.max(np.abs(ratio)), np.max(np.abs(across))))


def _tangent() -> float:
    # relative to the fBm covariance at (s1, s2) = (1, 2), and shrinking with epsilon
    errors = []
    for nu in (0.3, 0.7):
        fbm = 0.5 * 2.0 ** (2 * nu)
        coarse, fine = (tangent_fbm_gap(eps, nu, 1.0, 1.0, 2.0) / fbm for eps in (1e-2, 1e-3))
        errors.append(fine if fine < coarse else float("inf"))
    return max(errors)


CHECKS: List[Check] = [
    Check("schoenberg_mixture_vs_matern", 1e-8, _schoenberg),
    Check("matern_density_mass", 1e-8, _density_mass),
    Check("dawson_mixture_vs_imag_closed", 1e-7, _dawson),
    Check("hilbert_numeric_vs_imag_closed", 1e-4, _hilbert),
    Check("quadrature_vs_whittaker", 1e-6, _quadrature_real),
    Check("quadrature_vs_struve", 1e-6, _quadrature_imag),
    Check("fft_vs_closed_d1", 1e-5, _fft_vs_closed),
    Check("fft_axis_d2_vs_matern", 1e-4, _axis_d2),
    Check("fft_axis_d2_struve_law", 1e-2, _axis_d2_imag),
    Check("tangent_process_fbm_gap", 2e-2, _tangent),
]


def run_validation(names: List[str] = None) -> pd.DataFrame:
    """One row per check: name, passed, measured error, tolerance."""
    rows = []
    for check in CHECKS:
        if names and check.name not in names:
            continue
        try:
            error = float(check.measure())
        except MaternError as exc:
            logger.error("check %s raised [%s]: %s", check.name, exc.code, exc)
            error = float("inf")
        passed = bool(error <= check.tolerance)
        log = logger.info if passed else logger.warning
        log("check %-32s error %.3e (tol %.0e) %s", check.name, error, check.tolerance, "ok" if passed else "FAILED")
        rows.append({"name": check.name, "passed": passed, "error": error, "tolerance": check.tolerance})
    return pd.DataFrame(rows, columns=["name", "passed", "error", "tolerance"])
