import logging
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from src.mvmatern.config import settings
from src.mvmatern.errors import FactorizationError

logger = logging.getLogger(__name__)


def stable_cholesky(
    matrix: np.ndarray,
    jitter_start: Optional[float] = None,
    jitter_max: Optional[float] = None,
    context: str = "covariance matrix",
) -> Tuple[np.ndarray, float]:
    """
    Lower Cholesky factor, adding jitter * trace to the diagonal when needed.

    Jitter starts at ``jitter_start`` and grows tenfold up to ``jitter_max``
    (relative to the trace); returns the factor and the absolute jitter used.
    """
    jitter_start = settings.JITTER_START if jitter_start is None else jitter_start
    jitter_max = settings.JITTER_MAX if jitter_max is None else jitter_max
    matrix = np.asarray(matrix, dtype=float)
    if not np.all(np.isfinite(matrix)):
        raise FactorizationError(f"{context} has non-finite entries")
    try:
        return linalg.cholesky(matrix, lower=True, check_finite=False), 0.0
    except linalg.LinAlgError:
        pass
    trace = float(np.trace(matrix))
    scale = jitter_start
    while scale <= jitter_max * (1.0 + 1e-9):
        jitter = scale * trace
        try:
            factor = linalg.cholesky(matrix + jitter * np.eye(matrix.shape[0]), lower=True, check_finite=False)
            logger.warning("%s needed jitter %.1e * trace to factorize", context, scale)
            return factor, jitter
        except linalg.LinAlgError:
            scale *= 10.0
    raise FactorizationError(f"{context} is not positive definite even with jitter {jitter_max:.0e} * trace")


def chol_logdet(factor: np.ndarray) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(factor))))


def chol_solve(factor: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return linalg.cho_solve((factor, True), rhs, check_finite=False)


def min_eigenvalue_ratio(matrix: np.ndarray) -> float:
    """Smallest eigenvalue divided by the trace."""
    eig = np.linalg.eigvalsh(matrix)
    return float(eig.min() / np.trace(matrix))
