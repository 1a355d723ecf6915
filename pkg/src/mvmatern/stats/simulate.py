"""
Gaussian realizations of a model at arbitrary points.

Replicate r draws from its own PCG64 stream spawned from
``SeedSequence(seed)``, so output depends only on (seed, replicate) and not
on how replicates are scheduled. Output rows are replicates; columns are
variable-major: all points of variable 0, then variable 1, and so on.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional

import numpy as np
from scipy import stats

from src.mvmatern.config import settings
from src.mvmatern.errors import ModelValidationError
from src.mvmatern.models.dataset import Dataset
from src.mvmatern.models.model_spec import ModelSpec, Variant
from src.mvmatern.models.request_dto import SimRequest
from src.mvmatern.numerics.covariance import CovFunction, cov_matrix, dataset_extent
from src.mvmatern.numerics.linalg import stable_cholesky
from src.mvmatern.numerics.spectral import spectral_density_matrix, validated

logger = logging.getLogger(__name__)


def replicate_generators(seed: int, n_replicates: int) -> List[np.random.Generator]:
    return [np.random.Generator(np.random.PCG64(child))
            for child in np.random.SeedSequence(seed).spawn(n_replicates)]


def stacked_dataset(model: ModelSpec, points: np.ndarray, values: Optional[np.ndarray] = None) -> Dataset:
    """Every (point, variable) pair in the variable-major column order."""
    n = points.shape[0]
    coords = np.tile(points, (model.p, 1))
    var = np.repeat(np.arange(model.p), n)
    if values is None:
        values = np.zeros(model.p * n)
    return Dataset(coords=coords, var=var, value=values, p=model.p)


def simulate_exact(req: SimRequest, max_workers: Optional[int] = None) -> np.ndarray:
    """Samples N(0, Gamma) through the Cholesky factor of the joint covariance."""
    model = validated(req.model, "simulate_exact")
    points = req.location_array()
    layout = stacked_dataset(model, points)
    cov_fn = CovFunction(model, max_lag=dataset_extent(layout))
    gamma = cov_matrix(model, layout, cov_fn, include_nugget=req.include_nugget)
    factor, jitter = stable_cholesky(gamma, context=f"simulation covariance of {model.describe()}")
    if jitter:
        logger.info("exact simulation used jitter %.3e", jitter)

    generators = replicate_generators(req.seed, req.n_replicates)
    m = layout.n

    def draw(rng: np.random.Generator) -> np.ndarray:
        return factor @ rng.standard_normal(m)

    with ThreadPoolExecutor(max_workers=max_workers or settings.THREADS) as pool:
        rows = list(pool.map(draw, generators))
    return np.vstack(rows)


def _proposal(model: ModelSpec):
    """Multivariate t matching the heaviest spectral tail; a Matérn density is itself a t density."""
    d = model.dim
    if model.variant == Variant.SQEXP:
        return stats.multivariate_t(loc=np.zeros(d), shape=2.0 * max(pp.a for pp in model.processes) * np.eye(d), df=4.0)
    nus = [pp.nu for pp in model.processes] + [pair.nu for pair in model.mmg_extras or ()]
    scales = [pp.a for pp in model.processes] + [pair.a for pair in model.mmg_extras or ()]
    nu_min, a_min = min(nus), min(scales)
    return stats.multivariate_t(loc=np.zeros(d), shape=(a_min ** 2 / (2.0 * nu_min)) * np.eye(d), df=2.0 * nu_min)


def _hermitian_sqrt(weights: np.ndarray) -> np.ndarray:
    """B with B B^H = W for a stack (M, p, p) of Hermitian PSD matrices."""
    eigval, eigvec = np.linalg.eigh(weights)
    trace = np.real(np.trace(weights, axis1=-2, axis2=-1))
    bad = np.flatnonzero(eigval.min(axis=-1) < -1e-12 * np.maximum(trace, 0.0) - 1e-300)
    if bad.size:
        raise ModelValidationError(
            [f"spectral density matrix is not PSD at {bad.size} sampled frequencies "
             f"(min eigenvalue {eigval[bad].min():.3e})"], "simulate_spectral")
    root = np.sqrt(np.clip(eigval, 0.0, None))
    return (eigvec * root[..., None, :]) @ np.conj(np.swapaxes(eigvec, -1, -2))


def simulate_spectral(req: SimRequest, max_workers: Optional[int] = None) -> np.ndarray:
    """
    Importance-sampled spectral simulation

        Y(s) = M^{-1/2} sum_m Re[e^{i<s,x_m>} B_m] xi_m - Im[e^{i<s,x_m>} B_m] eta_m,

    with x_m ~ q, B_m B_m^H = f(x_m)/q(x_m) and xi, eta standard normal,
    whose covariance is int e^{i<h,x>} f(x) dx.
    """
    model = validated(req.model, "simulate_spectral")
    points = req.location_array()
    if points.shape[1] != model.dim:
        raise ValueError(f"locations have {points.shape[1]} coordinates, model has d={model.dim}")
    proposal = _proposal(model)
    n_freq = req.n_frequencies
    p = model.p
    nuggets = np.array([np.sqrt(pp.nugget) for pp in model.processes])

    def draw(rng: np.random.Generator) -> np.ndarray:
        # 1. Frequencies and importance weights
        freqs = np.asarray(proposal.rvs(size=n_freq, random_state=rng)).reshape(n_freq, model.dim)
        density_q = np.asarray(proposal.pdf(freqs)).reshape(n_freq)
        f = spectral_density_matrix(model, freqs)
        roots = _hermitian_sqrt(f / density_q[:, None, None])

        # 2. Random amplitudes
        xi = rng.standard_normal((n_freq, p))
        eta = rng.standard_normal((n_freq, p))
        b_xi = np.einsum("mij,mj->mi", roots, xi)
        b_eta = np.einsum("mij,mj->mi", roots, eta)

        # 3. Superpose
        phase = np.exp(1j * (points @ freqs.T))
        field = ((phase @ b_xi).real - (phase @ b_eta).imag) / np.sqrt(n_freq)
        if req.include_nugget and np.any(nuggets > 0):
            field = field + rng.standard_normal(field.shape) * nuggets[None, :]
        return field.T.reshape(-1)

    generators = replicate_generators(req.seed, req.n_replicates)
    with ThreadPoolExecutor(max_workers=max_workers or settings.THREADS) as pool:
        rows = list(pool.map(draw, generators))
    return np.vstack(rows)


def simulate(req: SimRequest, max_workers: Optional[int] = None) -> np.ndarray:
    if req.method == "exact":
        return simulate_exact(req, max_workers)
    return simulate_spectral(req, max_workers)


def as_dataset(model: ModelSpec, points, row: np.ndarray) -> Dataset:
    """One replicate row as a Dataset of every (point, variable) record."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    return stacked_dataset(model, pts, np.asarray(row, dtype=float))
